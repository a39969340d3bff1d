//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use flat_core::bench::{self, BenchConfig};
use flat_core::crf::Crf;
use flat_core::data::{Entity, Vocab};
use flat_core::lexicon::{flatten, match_words, recover};
use flat_core::metrics::{self, Counts};
use flat_core::model::{attention_scores, attention_weights, MaskSpec};
use flat_core::numerics::{grad_check, GradCheckConfig, Graph};
use flat_core::position::{distances, fuse, DistanceMatrices};
use flat_core::synthetic::{generate, SyntheticSpec};
use flat_core::train::{train, EvalSet, TrainConfig};
use flat_core::{FlatLattice, FlatModel, ModelConfig, Scheme, TaggedSentence, Trie};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROUNDTRIP_CASES: usize = 1_000;
const ROUNDTRIP_SECONDS: f64 = 10.0;
const MATCH_CASES: usize = 500;
const POSITION_CASES: usize = 200;
const NAIVE_R_TOL: f64 = 1e-12;
const SCORE_TOL: f64 = 1e-10;
const VANILLA_TOL: f64 = 1e-10;
const SOFTMAX_TOL: f64 = 1e-6;
const GRAD_TOL: f64 = 1e-4;
const GRAD_SECONDS: f64 = 60.0;
const CRF_CASES: usize = 200;
const CRF_TOL: f64 = 1e-8;
const OVERFIT_EPOCHS: usize = 300;
const OVERFIT_SECONDS: f64 = 300.0;
const METRIC_CASES: usize = 1_000;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn lattice_roundtrip() -> Check {
    let mut rng = rng(101);
    let alpha = alphabet(6);
    let t = Instant::now();
    let mut words = 0;
    for case in 0..ROUNDTRIP_CASES {
        let chars = random_chars(&mut rng, &alpha, 0..=40);
        let lexicon = random_lexicon(&mut rng, &alpha, 0..=30, 1..=5);
        let trie = Trie::build(&lexicon).map_err(|e| e.to_string())?;
        let matches = match_words(&chars, &trie);
        let flat = flatten(&chars, &matches).map_err(|e| e.to_string())?;
        let graph = recover(&flat).map_err(|e| e.to_string())?;
        ensure(graph.chars() == chars, || format!("case {case}: character chain differs"))?;
        let mut expected = matches.clone();
        expected.sort();
        ensure(graph.skip_paths() == expected, || format!("case {case}: word spans differ"))?;
        ensure(graph.is_acyclic(), || format!("case {case}: cycle"))?;
        words += matches.len();
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < ROUNDTRIP_SECONDS, || format!("took {secs:.2}s"))?;
    Ok(format!("{ROUNDTRIP_CASES} cases, {words} words, {secs:.2}s < {ROUNDTRIP_SECONDS}s"))
}

fn matching_oracle() -> Check {
    let mut rng = rng(102);
    let alpha = alphabet(20);
    let mut total = 0;
    for case in 0..MATCH_CASES {
        let chars = random_chars(&mut rng, &alpha, 0..=64);
        let lexicon = random_lexicon(&mut rng, &alpha, 0..=200, 1..=4);
        let trie = Trie::build(&lexicon).map_err(|e| e.to_string())?;
        let got: Vec<(usize, usize, String)> = match_words(&chars, &trie)
            .iter()
            .map(|m| (m.head, m.tail, trie.word(m.word).unwrap().to_owned()))
            .collect();
        let want = brute_force_matches(&chars, &lexicon);
        ensure(got == want, || format!("case {case}: {} matches vs {} by scan", got.len(), want.len()))?;
        total += want.len();
    }
    Ok(format!("{MATCH_CASES} cases, {total} matches, exact"))
}

fn position_encoding() -> Check {
    let mut rng = rng(103);
    let alpha = alphabet(6);
    let d = 16;
    let mut worst: f64 = 0.0;
    for case in 0..POSITION_CASES {
        let chars = random_chars(&mut rng, &alpha, 1..=12);
        let lexicon = random_lexicon(&mut rng, &alpha, 0..=10, 2..=4);
        let flat = FlatLattice::from_sentence(&chars, &Trie::build(&lexicon).unwrap());
        let dm = distances(&flat);
        let n = dm.n_spans();
        for i in 0..n {
            for j in 0..n {
                let (hh, ht, _, tt) = dm.at(i, j);
                let (hh2, _, th2, tt2) = dm.at(j, i);
                ensure(hh == -hh2 && tt == -tt2 && ht == -th2, || {
                    format!("case {case}: symmetry fails at ({i}, {j})")
                })?;
            }
        }

        let w_r = random_tensor(&mut rng, d, 4 * d, 1.0);
        let r = fuse(&dm, &w_r).map_err(|e| e.to_string())?;
        let shift: i64 = rng.random_range(-1000..1000);
        let shifted: Vec<(i64, i64)> = flat
            .spans()
            .iter()
            .map(|s| (s.head as i64 + shift, s.tail as i64 + shift))
            .collect();
        let r_shift = fuse(&DistanceMatrices::from_positions(&shifted), &w_r).map_err(|e| e.to_string())?;
        ensure(r == r_shift, || format!("case {case}: shift by {shift} changes R"))?;

        let naive = naive_r(&dm, &w_r);
        for i in 0..n {
            for j in 0..n {
                for (a, b) in r.get(i, j).iter().zip(&naive[i * n + j]) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    ensure(worst <= NAIVE_R_TOL, || format!("memoized vs naive R differ by {worst:e}"))?;
    Ok(format!(
        "{POSITION_CASES} lattices, symmetries and shift invariance exact, naive R within {worst:.1e} <= {NAIVE_R_TOL:e}"
    ))
}

fn small_config(scale: bool) -> ModelConfig {
    ModelConfig {
        d_model: 16,
        n_heads: 2,
        ffn_size: 24,
        char_dim: 6,
        word_dim: 5,
        scale_attention: scale,
        ..ModelConfig::default()
    }
}

fn attention() -> Check {
    let mut rng = rng(104);

    // four-term scores
    let mut score_err: f64 = 0.0;
    for scale in [true, false] {
        let (model, insts) = random_model(&mut rng, small_config(scale), 20, 1..=6, 8);
        for inst in &insts {
            let s = inst.n_spans();
            let e = random_tensor(&mut rng, s, 16, 1.0);
            let r = random_tensor(&mut rng, s * s, 16, 1.0);
            for head in 0..2 {
                let got = attention_scores(&model, &model.params, &e, &r, 0, head).map_err(|e| e.to_string())?;
                let want = four_term_scores(&model, &e, &r, 0, head);
                for i in 0..s {
                    for j in 0..s {
                        score_err = score_err.max((got.get(i, j) - want[i][j]).abs());
                    }
                }
            }
        }
    }
    ensure(score_err <= SCORE_TOL, || format!("scores differ from four-term sum by {score_err:e}"))?;

    // vanilla path with the position and bias terms switched off
    let mut vanilla_err: f64 = 0.0;
    for mask in [MaskSpec::None, MaskSpec::SelfMatched] {
        let mut config = small_config(true);
        config.mask = mask;
        config.n_layers = 2;
        let (mut model, insts) = random_model(&mut rng, config, 20, 1..=6, 8);
        for layer in model.ids.layers.clone() {
            for h in &layer.heads {
                for id in [h.w_kr, h.u, h.v] {
                    model.params.value_mut(id).data_mut().fill(0.0);
                }
            }
        }
        let engine = model.engine();
        for inst in &insts {
            let want = vanilla_encode(&model, inst);
            let batched = engine.encode_batch(&[inst]).map_err(|e| e.to_string())?;
            let mut g = Graph::new(&model.params);
            let c = model.encode(&mut g, inst).map_err(|e| e.to_string())?;
            for got in [&batched[0], g.value(c)] {
                for (i, row) in want.iter().enumerate() {
                    for (a, b) in got.row(i).iter().zip(row) {
                        vanilla_err = vanilla_err.max((a - b).abs());
                    }
                }
            }
        }
    }
    ensure(vanilla_err <= VANILLA_TOL, || format!("vanilla path differs by {vanilla_err:e}"))?;

    // softmax rows and masked entries, then batching
    let masks = [
        MaskSpec::None,
        MaskSpec::SelfMatched,
        MaskSpec::long_distance(1),
    ];
    let mut row_err: f64 = 0.0;
    let mut masked_entries = 0;
    let mut compared = 0;
    for mask in masks {
        let mut config = small_config(true);
        config.mask = mask;
        let (model, insts) = random_model(&mut rng, config, 40, 1..=10, 24);
        for inst in &insts {
            let s = inst.n_spans();
            for head in 0..2 {
                let w = attention_weights(&model, inst, 0, head).map_err(|e| e.to_string())?;
                for i in 0..s {
                    let mut sum = 0.0;
                    for j in 0..s {
                        let x = w.get(i, j);
                        ensure(x >= 0.0, || format!("negative weight {x}"))?;
                        if inst.mask.as_ref().is_some_and(|m| !m[i * s + j]) {
                            ensure(x == 0.0, || format!("masked entry ({i}, {j}) has weight {x:e}"))?;
                            masked_entries += 1;
                        } else {
                            sum += x;
                        }
                    }
                    row_err = row_err.max((sum - 1.0).abs());
                }
            }
        }
        let engine = model.engine();
        let batched = engine.predict_all(&insts, 16).map_err(|e| e.to_string())?;
        let em_batched = engine.emissions_batch(&insts.iter().collect::<Vec<_>>()).map_err(|e| e.to_string())?;
        for (k, inst) in insts.iter().enumerate() {
            let single = engine.predict_batch(&[inst]).map_err(|e| e.to_string())?;
            let em_single = engine.emissions_batch(&[inst]).map_err(|e| e.to_string())?;
            ensure(single[0] == batched[k], || format!("{mask:?}: sentence {k} prediction depends on batching"))?;
            ensure(em_single[0] == em_batched[k], || format!("{mask:?}: sentence {k} emissions depend on batching"))?;
            compared += 1;
        }
    }
    ensure(row_err <= SOFTMAX_TOL, || format!("softmax rows off by {row_err:e}"))?;
    ensure(masked_entries > 0, || "no masked entries were exercised".into())?;
    Ok(format!(
        "scores within {score_err:.1e}, vanilla within {vanilla_err:.1e} (tol {SCORE_TOL:e}); \
         rows within {row_err:.1e} <= {SOFTMAX_TOL:e}; {masked_entries} masked entries exactly 0; \
         {compared} sentences batched == unbatched exactly"
    ))
}

fn gradient_check() -> Check {
    let t = Instant::now();
    let corpus = vec![TaggedSentence {
        chars: "重庆人和".chars().collect(),
        tags: ["B-GPE", "E-GPE", "S-PER", "O"].iter().map(|s| s.to_string()).collect(),
    }];
    let trie = Trie::build(&["重庆", "人和"]).unwrap();
    let vocab = Vocab::build(&corpus, &trie);
    let mut worst: f64 = 0.0;
    let mut scalars = 0;
    for mask in [MaskSpec::None, MaskSpec::SelfMatched] {
        let config = ModelConfig {
            d_model: 8,
            n_heads: 2,
            ffn_size: 16,
            char_dim: 4,
            word_dim: 4,
            mask,
            ..ModelConfig::default()
        };
        let mut rng = rng(105);
        let mut model = FlatModel::new(config, vocab.clone(), Scheme::Bmes, &mut rng).map_err(|e| e.to_string())?;
        perturb(&mut model, &mut rng, 0.3);
        let inst = model.featurize(&corpus[0].chars, Some(&corpus[0].tags)).map_err(|e| e.to_string())?;
        ensure(inst.n_spans() == 6 && model.n_tags() == 4, || "fixture shape changed".into())?;
        let report = grad_check(|g| model.loss(g, &inst), &model.params, GradCheckConfig::default())
            .map_err(|e| e.to_string())?;
        worst = worst.max(report.max_rel_err());
        scalars += model.params.num_scalars();
        if let Some(w) = report.worst().filter(|w| w.max_rel_err >= GRAD_TOL) {
            return Err(format!("{mask:?}: {} has relative error {:e}", w.name, w.max_rel_err));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < GRAD_SECONDS, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "{scalars} scalars over 2 masks, max relative error {worst:.2e} < {GRAD_TOL:e}, {secs:.1}s < {GRAD_SECONDS}s"
    ))
}

fn crf_oracle() -> Check {
    let mut rng = rng(106);
    let mut worst: f64 = 0.0;
    let mut ties = 0;
    for case in 0..CRF_CASES {
        let n = rng.random_range(1..=5);
        let k = rng.random_range(1..=4);
        // integer scores in half the cases make exact ties common
        let integer = case % 2 == 1;
        let mut draw = |len: usize| -> Vec<f64> {
            (0..len)
                .map(|_| {
                    if integer {
                        rng.random_range(-2i32..=2) as f64
                    } else {
                        rng.random_range(-2.0..2.0)
                    }
                })
                .collect()
        };
        let em = flat_core::Tensor::from_vec(n, k, draw(n * k)).unwrap();
        let trans = flat_core::Tensor::from_vec(k, k, draw(k * k)).unwrap();
        let (start, end) = (draw(k), draw(k));
        let crf = Crf::new(&trans, &start, &end).map_err(|e| e.to_string())?;
        let (z, path, score) = brute_force_crf(&em, &trans, &start, &end);
        let got_z = crf.log_partition(&em).map_err(|e| e.to_string())?;
        let (got_path, got_score) = crf.viterbi(&em).map_err(|e| e.to_string())?;
        worst = worst.max((got_z - z).abs()).max((got_score - score).abs());
        ensure(got_path == path, || format!("case {case}: viterbi {got_path:?} vs enumeration {path:?}"))?;
        if integer {
            ties += 1;
        }
    }
    ensure(worst <= CRF_TOL, || format!("differs from enumeration by {worst:e}"))?;
    Ok(format!(
        "{CRF_CASES} instances ({ties} integer-valued), max error {worst:.1e} <= {CRF_TOL:e}, argmax exact"
    ))
}

fn synthetic_overfit() -> Check {
    let t = Instant::now();
    let corpus = generate(&SyntheticSpec::default(), 1);
    let trie = Trie::build(&corpus.lexicon).unwrap();
    let vocab = Vocab::build(&corpus.sentences, &trie);
    ensure(vocab.chars.len() == 32 && trie.len() == 10 && corpus.sentences.len() == 50, || {
        "fixture shape changed".into()
    })?;
    let defaults = ModelConfig::default();
    let config = ModelConfig {
        d_model: 32,
        ffn_size: defaults.ffn_size * 32 / defaults.d_model,
        ..defaults
    };
    let mut model = FlatModel::new(config.clone(), vocab.clone(), Scheme::Bmes, &mut rng(1)).map_err(|e| e.to_string())?;
    let insts = corpus
        .sentences
        .iter()
        .map(|s| model.featurize(&s.chars, Some(&s.tags)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let dev = EvalSet::new(&model, &corpus.sentences).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        max_epochs: OVERFIT_EPOCHS,
        target_f1: Some(1.0),
        ..TrainConfig::default()
    };
    let out = train(&mut model, &insts, Some(&dev), &cfg, |_, _| {}).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let f1 = out.best_dev_f1.unwrap_or(0.0);
    ensure(out.diverged.is_none(), || format!("diverged: {:?}", out.diverged))?;
    ensure(f1 == 1.0, || format!("best F1 {f1} after {} epochs", out.history.len()))?;
    ensure(secs < OVERFIT_SECONDS, || format!("took {secs:.1}s"))?;

    // structural check of the self-matched mask on the same fixture
    let masked = FlatModel::new(
        ModelConfig {
            mask: MaskSpec::SelfMatched,
            ..config
        },
        vocab,
        Scheme::Bmes,
        &mut rng(1),
    )
    .map_err(|e| e.to_string())?;
    let mut zeroed = 0;
    for (k, s) in corpus.sentences.iter().enumerate() {
        let inst = masked.featurize(&s.chars, None).map_err(|e| e.to_string())?;
        let n = inst.n_spans();
        for head in 0..masked.config.n_heads {
            let w = attention_weights(&masked, &inst, 0, head).map_err(|e| e.to_string())?;
            for i in 0..n {
                let own: BTreeSet<usize> = if i < inst.n_chars() {
                    inst.flat.self_matched(i).map_err(|e| e.to_string())?.into_iter().collect()
                } else {
                    BTreeSet::new()
                };
                for j in 0..n {
                    let zero = w.get(i, j) == 0.0;
                    ensure(zero == own.contains(&j), || {
                        format!("sentence {k} head {head}: entry ({i}, {j}) zero={zero}")
                    })?;
                    zeroed += zero as usize;
                }
            }
        }
    }
    ensure(zeroed > 0, || "fixture has no self-matched words".into())?;
    Ok(format!(
        "F1 = 1.00 after {} epochs (limit {OVERFIT_EPOCHS}), {secs:.1}s < {OVERFIT_SECONDS}s; \
         msm zeroes exactly the {zeroed} self-matched entries",
        out.best_epoch + 1
    ))
}

fn random_entities(rng: &mut ChaCha8Rng, n: usize) -> Vec<Entity> {
    let count = rng.random_range(0..=6);
    (0..count)
        .map(|_| {
            let s = rng.random_range(0..n);
            let e = rng.random_range(s..n.min(s + 4));
            Entity::new(["A", "B", "C"][rng.random_range(0..3)], s, e)
        })
        .collect()
}

fn metric_identities() -> Check {
    let mut rng = rng(108);
    for case in 0..METRIC_CASES {
        let gold = random_entities(&mut rng, 12);
        let mut pred = random_entities(&mut rng, 12);
        // reuse some gold spans so matches are common
        for g in &gold {
            match rng.random_range(0..4) {
                0 => pred.push(g.clone()),
                1 => pred.push(Entity::new(if g.ty == "A" { "B" } else { "A" }, g.start, g.end)),
                _ => {}
            }
        }
        let c = Counts::of(&gold, &pred);
        let s = c.scores();
        ensure(0.0 <= s.f1 && s.f1 <= s.span_f && s.span_f <= 1.0, || {
            format!("case {case}: f1 {} span_f {}", s.f1, s.span_f)
        })?;
        ensure((0.0..=1.0).contains(&s.type_acc), || format!("case {case}: type_acc {}", s.type_acc))?;

        let gold_set: BTreeSet<&Entity> = gold.iter().collect();
        let pred_set: BTreeSet<&Entity> = pred.iter().collect();
        let gold_spans: BTreeSet<(usize, usize)> = gold.iter().map(|e| (e.start, e.end)).collect();
        let span_ok: Vec<&&Entity> = pred_set.iter().filter(|e| gold_spans.contains(&(e.start, e.end))).collect();
        let typed_ok = span_ok.iter().filter(|e| gold_set.contains(**e)).count();
        ensure(c.span_correct_pred == span_ok.len() && c.correct == typed_ok, || {
            format!("case {case}: counts {c:?} vs {} / {typed_ok}", span_ok.len())
        })?;
        if c.span_correct_pred > 0 {
            let product = c.span_correct_pred as f64 * s.type_acc;
            ensure(product.round() as usize == c.correct && (product - c.correct as f64).abs() < 1e-9, || {
                format!("case {case}: {} x {} != {}", c.span_correct_pred, s.type_acc, c.correct)
            })?;
        }
    }

    let e = |t: &str, s, x| Entity::new(t, s, x);
    let gold = [e("A", 0, 1), e("B", 3, 4), e("C", 6, 6)];
    let pred = [e("A", 0, 1), e("B", 3, 4), e("X", 6, 6), e("A", 8, 9)];
    let c = Counts::of(&gold, &pred);
    ensure(c.correct == 2 && c.span_correct_pred == 3 && c.type_acc() == 2.0 / 3.0, || format!("{c:?}"))?;
    ensure(metrics::f1(&gold, &gold) == (1.0, 1.0, 1.0), || "identical sets".into())?;
    ensure(metrics::f1(&[], &[]) == (1.0, 1.0, 1.0), || "empty sets".into())?;
    let (p, r, f) = metrics::f1(&[e("A", 0, 0), e("B", 1, 1)], &[e("A", 0, 0), e("C", 2, 2)]);
    ensure((p, r, f) == (0.5, 0.5, 0.5), || format!("half overlap gave {p} {r} {f}"))?;
    let wrong_types = [e("X", 0, 1), e("Y", 3, 4)];
    let right = [e("A", 0, 1), e("B", 3, 4)];
    ensure(
        metrics::span_f(&right, &wrong_types) == 1.0
            && metrics::f1(&right, &wrong_types).2 == 0.0
            && metrics::type_acc(&right, &wrong_types) == 0.0,
        || "boundary-only fixture".into(),
    )?;
    Ok(format!("{METRIC_CASES} random set pairs and 5 fixtures"))
}

fn bench_harness() -> Check {
    let corpus = generate(&SyntheticSpec::default(), 9);
    let trie = Trie::build(&corpus.lexicon).unwrap();
    let vocab = Vocab::build(&corpus.sentences, &trie);
    let config = ModelConfig {
        d_model: 64,
        n_heads: 4,
        ffn_size: 192,
        ..ModelConfig::default()
    };
    let model = FlatModel::new(config, vocab, Scheme::Bmes, &mut rng(9)).map_err(|e| e.to_string())?;
    let insts = corpus
        .sentences
        .iter()
        .map(|s| model.featurize(&s.chars, None))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let report = bench::run(&model, &insts, &BenchConfig::default()).map_err(|e| e.to_string())?;
    ensure(report.rows.len() == 2, || format!("{} rows", report.rows.len()))?;
    for row in &report.rows {
        ensure(row.sentences == insts.len() && row.trial_seconds.len() >= 5, || format!("{row:?}"))?;
    }
    let ratio = report.speedup_16_vs_1.ok_or("no batch-16 / batch-1 ratio")?;
    ensure(ratio.is_finite() && ratio > 0.0, || format!("ratio {ratio}"))?;
    ensure(report.params_unchanged(), || "parameter checksum changed".into())?;
    Ok(format!(
        "batch 1: {:.0} sent/s, batch 16: {:.0} sent/s, ratio {ratio:.2} (reference {:.2}, not asserted), \
         workers {}, checksum unchanged",
        report.rows[0].sentences_per_second, report.rows[1].sentences_per_second, report.reference_speedup, report.workers
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 lattice round-trip", lattice_roundtrip),
        ("2 matching oracle", matching_oracle),
        ("3 position encoding", position_encoding),
        ("4 attention correctness", attention),
        ("5 gradient check", gradient_check),
        ("6 CRF oracle", crf_oracle),
        ("7 synthetic overfit", synthetic_overfit),
        ("8 metric identities", metric_identities),
        ("9 bench harness", bench_harness),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {name}: PASS [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL [{secs:.1}s] {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

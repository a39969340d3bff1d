//! Independent reference implementations and fixtures for the integration
//! tests. Nothing here calls the code it is compared against.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::HashSet;
use std::ops::RangeInclusive;

use flat_core::data::Vocab;
use flat_core::position::{sinusoid, DistanceMatrices};
use flat_core::{FlatLattice, FlatModel, Instance, ModelConfig, Scheme, TaggedSentence, Tensor, Trie};
use rand::seq::IndexedRandom;
use rand::Rng;

const CJK: &str = "天地人和山水日月风云花草木石金火土光明清河海江城家书画琴棋诗酒茶";

/// Layer-norm epsilon used by the encoder.
pub const LN_EPS: f64 = 1e-5;

pub const TAGS4: [&str; 4] = ["O", "B-X", "E-X", "S-X"];

pub fn alphabet(n: usize) -> Vec<char> {
    let a: Vec<char> = CJK.chars().take(n).collect();
    assert_eq!(a.len(), n);
    a
}

pub fn random_chars(rng: &mut impl Rng, alpha: &[char], len: RangeInclusive<usize>) -> Vec<char> {
    let n = rng.random_range(len);
    (0..n).map(|_| *alpha.choose(rng).unwrap()).collect()
}

/// Random words, possibly repeated and possibly single characters.
pub fn random_lexicon(rng: &mut impl Rng, alpha: &[char], n: RangeInclusive<usize>, len: RangeInclusive<usize>) -> Vec<String> {
    let n = rng.random_range(n);
    (0..n)
        .map(|_| random_chars(rng, alpha, len.clone()).into_iter().collect())
        .filter(|w: &String| !w.is_empty())
        .collect()
}

/// Every `(head, tail, word)` with `head < tail` whose substring is a
/// lexicon word, by checking all substrings.
pub fn brute_force_matches(chars: &[char], lexicon: &[String]) -> Vec<(usize, usize, String)> {
    let set: HashSet<&str> = lexicon.iter().map(String::as_str).collect();
    let mut out = Vec::new();
    for i in 0..chars.len() {
        for j in i + 1..chars.len() {
            let s: String = chars[i..=j].iter().collect();
            if set.contains(s.as_str()) {
                out.push((i, j, s));
            }
        }
    }
    out
}

/// `R[i][j]` computed pair by pair: concatenate the four sinusoids and
/// multiply by the full `w_r`, then ReLU.
pub fn naive_r(dm: &DistanceMatrices, w_r: &Tensor) -> Vec<Vec<f64>> {
    let d = w_r.rows();
    let n = dm.n_spans();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (hh, ht, th, tt) = dm.at(i, j);
            let mut p = Vec::with_capacity(4 * d);
            for off in [hh, th, ht, tt] {
                p.extend(sinusoid(off, d).unwrap());
            }
            out.push(
                (0..d)
                    .map(|k| (0..4 * d).map(|m| w_r.get(k, m) * p[m]).sum::<f64>().max(0.0))
                    .collect(),
            );
        }
    }
    out
}

fn vec_mat(x: &[f64], w: &Tensor) -> Vec<f64> {
    (0..w.cols()).map(|c| (0..w.rows()).map(|r| x[r] * w.get(r, c)).sum()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Attention scores of one head as the sum of four separately computed
/// matrices: content-content, content-position, global content bias, and
/// global position bias.
pub fn four_term_scores(model: &FlatModel, e: &Tensor, r: &Tensor, layer: usize, head: usize) -> Vec<Vec<f64>> {
    let ids = &model.ids.layers[layer].heads[head];
    let p = &model.params;
    let (wq, wke, wkr) = (p.value(ids.w_q), p.value(ids.w_ke), p.value(ids.w_kr));
    let (u, v) = (p.value(ids.u).row(0), p.value(ids.v).row(0));
    let s = e.rows();
    let q: Vec<Vec<f64>> = (0..s).map(|i| vec_mat(e.row(i), wq)).collect();
    let k: Vec<Vec<f64>> = (0..s).map(|i| vec_mat(e.row(i), wke)).collect();
    let rk: Vec<Vec<f64>> = (0..s * s).map(|m| vec_mat(r.row(m), wkr)).collect();
    let scale = if model.config.scale_attention {
        1.0 / (model.config.d_head() as f64).sqrt()
    } else {
        1.0
    };
    let mut a = vec![vec![0.0; s]; s];
    for i in 0..s {
        for j in 0..s {
            let t1 = dot(&q[i], &k[j]);
            let t2 = dot(&q[i], &rk[i * s + j]);
            let t3 = dot(u, &k[j]);
            let t4 = dot(v, &rk[i * s + j]);
            a[i][j] = (t1 + t2 + t3 + t4) * scale;
        }
    }
    a
}

fn layer_norm(x: &[f64], gain: &[f64], bias: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = (var + LN_EPS).sqrt();
    x.iter().zip(gain).zip(bias).map(|((v, g), b)| (v - mean) / sd * g + b).collect()
}

/// Plain multi-head self-attention encoder over the instance's spans with
/// no position terms: softmax(QK^T) V per head, output projection,
/// residual and layer norm, then the feed-forward block. Returns the
/// character rows.
pub fn vanilla_encode(model: &FlatModel, inst: &Instance) -> Vec<Vec<f64>> {
    let p = &model.params;
    let ids = &model.ids;
    let (ct, cp) = (p.value(ids.char_table), p.value(ids.char_proj));
    let (wt, wp) = (p.value(ids.word_table), p.value(ids.word_proj));
    let mut e: Vec<Vec<f64>> = inst.char_rows.iter().map(|&r| vec_mat(ct.row(r), cp)).collect();
    e.extend(inst.word_rows.iter().map(|&r| vec_mat(wt.row(r), wp)));
    let s = e.len();
    let scale = if model.config.scale_attention {
        1.0 / (model.config.d_head() as f64).sqrt()
    } else {
        1.0
    };
    for layer in &ids.layers {
        let mut cat = vec![Vec::new(); s];
        for h in &layer.heads {
            let q: Vec<Vec<f64>> = e.iter().map(|x| vec_mat(x, p.value(h.w_q))).collect();
            let k: Vec<Vec<f64>> = e.iter().map(|x| vec_mat(x, p.value(h.w_ke))).collect();
            let v: Vec<Vec<f64>> = e.iter().map(|x| vec_mat(x, p.value(h.w_v))).collect();
            for i in 0..s {
                let allowed = |j: usize| inst.mask.as_ref().is_none_or(|m| m[i * s + j]);
                let scores: Vec<f64> = (0..s).map(|j| dot(&q[i], &k[j]) * scale).collect();
                let max = (0..s).filter(|&j| allowed(j)).map(|j| scores[j]).fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = (0..s)
                    .map(|j| if allowed(j) { (scores[j] - max).exp() } else { 0.0 })
                    .collect();
                let z: f64 = w.iter().sum();
                let dh = v[0].len();
                for c in 0..dh {
                    let val = if z > 0.0 { (0..s).map(|j| w[j] / z * v[j][c]).sum() } else { 0.0 };
                    cat[i].push(val);
                }
            }
        }
        let g = |id| p.value(id).row(0);
        let x: Vec<Vec<f64>> = (0..s)
            .map(|i| {
                let att = vec_mat(&cat[i], p.value(layer.w_o));
                let res: Vec<f64> = e[i].iter().zip(&att).map(|(a, b)| a + b).collect();
                layer_norm(&res, g(layer.ln1_gain), g(layer.ln1_bias))
            })
            .collect();
        e = x
            .iter()
            .map(|xi| {
                let h: Vec<f64> = vec_mat(xi, p.value(layer.ffn_w1))
                    .iter()
                    .zip(g(layer.ffn_b1))
                    .map(|(a, b)| (a + b).max(0.0))
                    .collect();
                let f = vec_mat(&h, p.value(layer.ffn_w2));
                let res: Vec<f64> = xi.iter().zip(&f).zip(g(layer.ffn_b2)).map(|((a, b), c)| a + b + c).collect();
                layer_norm(&res, g(layer.ln2_gain), g(layer.ln2_bias))
            })
            .collect();
    }
    e.truncate(inst.n_chars());
    e
}

/// Brute-force CRF: log-partition, lexicographically smallest best path,
/// and its score, by enumerating every tag sequence.
pub fn brute_force_crf(em: &Tensor, trans: &Tensor, start: &[f64], end: &[f64]) -> (f64, Vec<usize>, f64) {
    let (n, k) = (em.rows(), em.cols());
    let mut path = vec![0usize; n];
    let mut scores = Vec::new();
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    loop {
        let mut s = start[path[0]] + end[path[n - 1]];
        for t in 0..n {
            s += em.get(t, path[t]);
            if t > 0 {
                s += trans.get(path[t - 1], path[t]);
            }
        }
        if s > best.1 {
            best = (path.clone(), s);
        }
        scores.push(s);
        // odometer over tag sequences, last position fastest
        let mut t = n;
        loop {
            if t == 0 {
                let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
                return (z, best.0, best.1);
            }
            t -= 1;
            path[t] += 1;
            if path[t] < k {
                break;
            }
            path[t] = 0;
        }
    }
}

/// Adds uniform noise to every parameter so biases and CRF scores are not
/// at their zero initialization.
pub fn perturb(model: &mut FlatModel, rng: &mut impl Rng, amp: f64) {
    for id in model.params.ids().collect::<Vec<_>>() {
        for v in model.params.value_mut(id).data_mut() {
            *v += rng.random_range(-amp..amp);
        }
    }
}

/// A randomly initialized model over a random corpus whose lattices have at
/// most `max_spans` spans, with its featurized sentences (gold tags from
/// [`TAGS4`]).
pub fn random_model(
    rng: &mut impl Rng,
    config: ModelConfig,
    n_sentences: usize,
    len: RangeInclusive<usize>,
    max_spans: usize,
) -> (FlatModel, Vec<Instance>) {
    let alpha = alphabet(8);
    let lexicon = random_lexicon(rng, &alpha, 6..=6, 2..=3);
    let trie = Trie::build(&lexicon).unwrap();
    let mut corpus = Vec::with_capacity(n_sentences);
    while corpus.len() < n_sentences {
        let chars = random_chars(rng, &alpha, len.clone());
        if chars.is_empty() || FlatLattice::from_sentence(&chars, &trie).n_spans() > max_spans {
            continue;
        }
        let tags = chars.iter().map(|_| TAGS4.choose(rng).unwrap().to_string()).collect();
        corpus.push(TaggedSentence { chars, tags });
    }
    // every tag appears so the tag set has four entries
    corpus[0].tags = (0..corpus[0].chars.len()).map(|i| TAGS4[i % 4].to_owned()).collect();
    corpus.push(TaggedSentence {
        chars: alpha[..4].to_vec(),
        tags: TAGS4.iter().map(|t| t.to_string()).collect(),
    });
    let vocab = Vocab::build(&corpus, &trie);
    let mut model = FlatModel::new(config, vocab, Scheme::Bmes, rng).unwrap();
    perturb(&mut model, rng, 0.5);
    corpus.pop();
    let insts = corpus
        .iter()
        .map(|s| model.featurize(&s.chars, Some(&s.tags)).unwrap())
        .collect();
    (model, insts)
}

pub fn random_tensor(rng: &mut impl Rng, rows: usize, cols: usize, amp: f64) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-amp..amp)).collect()).unwrap()
}

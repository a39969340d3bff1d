use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use flat_core::bench::{self, BenchConfig};
use flat_core::config::Settings;
use flat_core::data::{align_embeddings, read_corpus, read_lexicon, read_word2vec, Vocab};
use flat_core::train::{self, EvalSet};
use flat_core::{FlatLattice, FlatModel, Instance, Trie};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{BenchArgs, EvalArgs, LatticeArgs, PredictArgs, SettingsArgs, TrainArgs};

fn settings(args: &SettingsArgs) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &args.config {
        s.apply_file(path)?;
    }
    s.apply_env(|k| std::env::var(k).ok())?;
    s.apply_overrides(&args.set)?;
    s.validate()?;
    Ok(s)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Lines of `path`, or of standard input when `path` is absent.
fn read_lines(path: Option<&Path>) -> Result<Vec<String>> {
    let text = match path {
        Some(p) => read_text(p)?,
        None => {
            let mut buf = String::new();
            std::io::stdin().read_to_string(&mut buf).context("cannot read standard input")?;
            buf
        }
    };
    Ok(text.lines().map(str::to_owned).collect())
}

fn load_model(path: &Path) -> Result<FlatModel> {
    FlatModel::load(path).with_context(|| format!("cannot load model {}", path.display()))
}

fn featurize_lines(model: &FlatModel, lines: &[String]) -> Result<Vec<Instance>> {
    lines
        .iter()
        .map(|l| {
            let chars: Vec<char> = l.chars().collect();
            Ok(model.featurize(&chars, None)?)
        })
        .collect()
}

pub fn train(args: TrainArgs) -> Result<()> {
    let mut s = settings(&args.settings)?;
    let train_set = read_corpus(&args.train, s.scheme)?;
    if train_set.is_empty() {
        bail!("{} holds no sentences", args.train.display());
    }
    let dev_set = args.dev.as_deref().map(|p| read_corpus(p, s.scheme)).transpose()?;
    let lexicon = match &args.lexicon {
        Some(p) => read_lexicon(p)?,
        None => Vec::new(),
    };
    let trie = Trie::build(&lexicon)?;
    let vocab = Vocab::build(&train_set, &trie);
    log::info!(
        "{} training sentences, {} characters, {} lexicon words, {} tags",
        train_set.len(),
        vocab.chars.len(),
        trie.len(),
        vocab.n_tags()
    );

    let char_vecs = args.char_emb.as_deref().map(read_word2vec).transpose()?;
    let word_vecs = args.word_emb.as_deref().map(read_word2vec).transpose()?;
    if let Some(v) = &char_vecs {
        if v.dim != s.model.char_dim {
            log::warn!("char_dim {} replaced by the embedding width {}", s.model.char_dim, v.dim);
            s.model.char_dim = v.dim;
        }
    }
    if let Some(v) = &word_vecs {
        if v.dim != s.model.word_dim {
            log::warn!("word_dim {} replaced by the embedding width {}", s.model.word_dim, v.dim);
            s.model.word_dim = v.dim;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(s.train.seed);
    let mut model = FlatModel::new(s.model.clone(), vocab, s.scheme, &mut rng)?;
    if let Some(v) = &char_vecs {
        let key = |t: &str| {
            let mut it = t.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => Some(c),
                _ => None,
            }
        };
        let t = align_embeddings(v, &model.vocab.chars, key, &mut rng);
        log::info!("character vectors: {} loaded, {} missing", t.loaded, t.missing);
        model.set_char_embeddings(t.table)?;
    }
    if let Some(v) = &word_vecs {
        let t = align_embeddings(v, &model.vocab.words, |w| Some(w.to_owned()), &mut rng);
        log::info!("word vectors: {} loaded, {} missing", t.loaded, t.missing);
        model.set_word_embeddings(t.table)?;
    }

    let insts = train_set
        .iter()
        .map(|x| model.featurize(&x.chars, Some(&x.tags)))
        .collect::<flat_core::Result<Vec<_>>>()?;
    let dev = dev_set.as_ref().map(|d| EvalSet::new(&model, d)).transpose()?;

    let mut history = match &args.history {
        Some(p) => Some(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => None,
    };
    let mut write_err: Option<std::io::Error> = None;
    let outcome = train::train(&mut model, &insts, dev.as_ref(), &s.train, |r, _| {
        if let (Some(w), None) = (history.as_mut(), write_err.as_ref()) {
            let line = serde_json::to_string(r).expect("epoch records serialize");
            write_err = writeln!(w, "{line}").err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(anyhow::Error::new(e).context("cannot write history"));
    }
    if let Some(mut w) = history {
        w.flush().context("cannot write history")?;
    }
    if let Some((epoch, loss)) = outcome.diverged {
        return Err(flat_core::Error::Diverged { epoch, loss }.into());
    }

    model.params = outcome.best_params;
    model.save(&args.out)?;
    match outcome.best_dev_f1 {
        Some(f1) => println!("best_epoch={} best_dev_f1={f1}", outcome.best_epoch),
        None => println!("best_epoch={}", outcome.best_epoch),
    }
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let sentences = read_corpus(&args.data, model.scheme)?;
    let set = EvalSet::new(&model, &sentences)?;
    let scores = train::evaluate(&model.engine(), &model, &set, args.batch_size.max(1))?;
    if args.json {
        println!("{}", serde_json::to_string(&scores)?);
    } else {
        println!("precision={}", scores.precision);
        println!("recall={}", scores.recall);
        println!("f1={}", scores.f1);
        println!("span_f={}", scores.span_f);
        println!("type_acc={}", scores.type_acc);
    }
    Ok(())
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let lines = read_lines(args.input.as_deref())?;
    let insts = featurize_lines(&model, &lines)?;
    let paths = model.engine().predict_all(&insts, args.batch_size.max(1))?;
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for (line, path) in lines.iter().zip(&paths) {
        for (c, tag) in line.chars().zip(model.vocab.tag_names(path)) {
            writeln!(out, "{c}\t{tag}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let lines = read_lines(Some(&args.input))?;
    let insts = featurize_lines(&model, &lines)?;
    let mut cfg = BenchConfig {
        batch_sizes: args.batch_sizes,
        trials: args.trials,
        warmup: args.warmup,
        ..BenchConfig::default()
    };
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    let report = bench::run(&model, &insts, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if !report.params_unchanged() {
        bail!("parameters changed during the benchmark");
    }
    Ok(())
}

pub fn lattice(args: LatticeArgs) -> Result<()> {
    let lexicon = read_lexicon(&args.lexicon)?;
    let trie = Trie::build(&lexicon)?;
    let lines = match args.sentence {
        Some(s) => vec![s],
        None => read_lines(args.input.as_deref())?,
    };
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        let chars: Vec<char> = line.chars().collect();
        write!(out, "{}", FlatLattice::from_sentence(&chars, &trie).dump(&trie))?;
    }
    out.flush()?;
    Ok(())
}

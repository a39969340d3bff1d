//! Inference throughput at several batch sizes.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FlatModel, Instance};

/// Batch-16 over batch-1 speedup reported for the reference implementation,
/// kept for comparison only.
pub const REFERENCE_SPEEDUP: f64 = 4.97;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub batch_sizes: Vec<usize>,
    pub trials: usize,
    /// Untimed passes before the timed trials of each batch size.
    pub warmup: usize,
    pub workers: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            batch_sizes: vec![1, 16],
            trials: 5,
            warmup: 1,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThroughputRow {
    pub batch_size: usize,
    pub sentences: usize,
    pub trial_seconds: Vec<f64>,
    pub median_seconds: f64,
    pub sentences_per_second: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub rows: Vec<ThroughputRow>,
    /// Throughput at batch 16 divided by throughput at batch 1, when both ran.
    pub speedup_16_vs_1: Option<f64>,
    pub reference_speedup: f64,
    pub workers: usize,
    pub trials: usize,
    pub checksum_before: u64,
    pub checksum_after: u64,
}

impl BenchReport {
    pub fn params_unchanged(&self) -> bool {
        self.checksum_before == self.checksum_after
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Times Viterbi prediction over all of `insts` for each batch size.
pub fn run(model: &FlatModel, insts: &[Instance], cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.trials == 0 || cfg.batch_sizes.contains(&0) || cfg.workers == 0 {
        return Err(Error::Config("trials, workers, and batch sizes must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let checksum_before = model.params.checksum();
    let engine = model.engine();
    let mut rows = Vec::with_capacity(cfg.batch_sizes.len());
    for &bs in &cfg.batch_sizes {
        let mut trial_seconds = Vec::with_capacity(cfg.trials);
        pool.install(|| -> Result<()> {
            for _ in 0..cfg.warmup {
                engine.predict_all(insts, bs)?;
            }
            for _ in 0..cfg.trials {
                let t = Instant::now();
                let out = engine.predict_all(insts, bs)?;
                trial_seconds.push(t.elapsed().as_secs_f64());
                debug_assert_eq!(out.len(), insts.len());
            }
            Ok(())
        })?;
        let median_seconds = median(&trial_seconds);
        rows.push(ThroughputRow {
            batch_size: bs,
            sentences: insts.len(),
            sentences_per_second: insts.len() as f64 / median_seconds.max(f64::MIN_POSITIVE),
            median_seconds,
            trial_seconds,
        });
    }
    let rate = |b: usize| rows.iter().find(|r| r.batch_size == b).map(|r| r.sentences_per_second);
    let speedup_16_vs_1 = match (rate(16), rate(1)) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    Ok(BenchReport {
        rows,
        speedup_16_vs_1,
        reference_speedup: REFERENCE_SPEEDUP,
        workers: cfg.workers,
        trials: cfg.trials,
        checksum_before,
        checksum_after: model.params.checksum(),
    })
}

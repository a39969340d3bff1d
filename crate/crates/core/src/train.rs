//! SGD with momentum, per-epoch warmup and decay, and dev-set model selection.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{tags_to_entities, Entity, TaggedSentence};
use crate::error::{Error, Result};
use crate::metrics::{Counts, Scores};
use crate::model::{FlatModel, InferenceEngine, Instance};
use crate::numerics::{Gradients, Graph, ParamStore, Tensor};

/// How per-sentence losses combine into the batch objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossReduction {
    #[default]
    Sum,
    Mean,
}

impl std::str::FromStr for LossReduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(LossReduction::Sum),
            "mean" => Ok(LossReduction::Mean),
            _ => Err(Error::Config(format!("unknown loss reduction {s:?}, expected sum or mean"))),
        }
    }
}

impl std::fmt::Display for LossReduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossReduction::Sum => "sum",
            LossReduction::Mean => "mean",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub momentum: f64,
    pub warmup_epochs: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Rescale the batch gradient to at most this global norm.
    pub grad_clip: Option<f64>,
    /// Stop once dev F1 reaches this value.
    pub target_f1: Option<f64>,
    pub eval_batch_size: usize,
    pub loss_reduction: LossReduction,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 10,
            lr: 1e-3,
            lr_decay: 0.05,
            momentum: 0.9,
            warmup_epochs: 10,
            max_epochs: 100,
            seed: 1,
            grad_clip: None,
            target_f1: None,
            eval_batch_size: 16,
            loss_reduction: LossReduction::Sum,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.eval_batch_size == 0 {
            return Err(Error::Config("batch sizes must be positive".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be finite and non-negative, got {}", self.lr)));
        }
        if self.lr_decay.is_nan() || self.lr_decay < 0.0 {
            return Err(Error::Config(format!("lr_decay must be non-negative, got {}", self.lr_decay)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if let Some(c) = self.grad_clip {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::Config(format!("grad_clip must be positive, got {c}")));
            }
        }
        Ok(())
    }

    /// Learning rate for a 0-based epoch: linear warmup reaching `lr` on the
    /// last warmup epoch, then `lr / (1 + lr_decay * (epoch - warmup_epochs))`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if epoch < self.warmup_epochs {
            self.lr * (epoch + 1) as f64 / self.warmup_epochs as f64
        } else {
            self.lr / (1.0 + self.lr_decay * (epoch - self.warmup_epochs) as f64)
        }
    }
}

/// Momentum SGD: `v <- mu * v - lr * g`, `theta <- theta + v`.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub momentum: f64,
    velocity: Vec<Option<Tensor>>,
}

impl Sgd {
    pub fn new(momentum: f64, n_params: usize) -> Self {
        Sgd {
            momentum,
            velocity: vec![None; n_params],
        }
    }

    /// Parameters without a gradient this step still coast on their velocity.
    pub fn step(&mut self, params: &mut ParamStore, grads: &Gradients, lr: f64) {
        let ids: Vec<_> = params.ids().collect();
        for id in ids {
            if params.get(id).frozen {
                continue;
            }
            let g = grads.get(id);
            let slot = &mut self.velocity[id.index()];
            if g.is_none() && slot.is_none() {
                continue;
            }
            let theta = params.value_mut(id);
            let v = slot.get_or_insert_with(|| Tensor::zeros(theta.rows(), theta.cols()));
            for (k, vk) in v.data_mut().iter_mut().enumerate() {
                let gk = g.map_or(0.0, |g| g.data()[k]);
                *vk = self.momentum * *vk - lr * gk;
            }
            theta.add_assign(v);
        }
    }
}

/// Sentences prepared for scoring.
#[derive(Debug, Clone)]
pub struct EvalSet {
    pub instances: Vec<Instance>,
    pub gold: Vec<Vec<Entity>>,
}

impl EvalSet {
    pub fn new(model: &FlatModel, sentences: &[TaggedSentence]) -> Result<Self> {
        let instances = sentences
            .iter()
            .map(|s| model.featurize(&s.chars, None))
            .collect::<Result<_>>()?;
        let gold = sentences.iter().map(|s| s.entities(model.scheme)).collect();
        Ok(EvalSet { instances, gold })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// Scores of `engine`'s Viterbi predictions on `set`.
pub fn evaluate(engine: &InferenceEngine, model: &FlatModel, set: &EvalSet, batch_size: usize) -> Result<Scores> {
    let preds = engine.predict_all(&set.instances, batch_size)?;
    let mut counts = Counts::default();
    for (path, gold) in preds.iter().zip(&set.gold) {
        let tags = model.vocab.tag_names(path);
        counts.add(Counts::of(gold, &tags_to_entities(&tags, model.scheme)));
    }
    Ok(counts.scores())
}

/// One line of training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Mean per-sentence loss over the epoch.
    pub loss: f64,
    pub dev_f1: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    /// Parameters of the selected epoch, rounded to single precision as a
    /// checkpoint would store them.
    pub best_params: ParamStore,
    pub best_epoch: usize,
    pub best_dev_f1: Option<f64>,
    /// Set when the loss became non-finite; the model then holds the
    /// parameters from the start of that epoch.
    pub diverged: Option<(usize, f64)>,
}

fn dropout_rng(seed: u64, epoch: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d809_0000_0000);
    rng.set_stream(((epoch as u64) << 32) | index as u64);
    rng
}

/// Mean per-sentence loss of a batch and the gradient of the batch objective
/// under `reduction`. Sentences run in parallel on their own graphs;
/// gradients are summed in sentence order, so the result does not depend on
/// scheduling.
pub fn batch_gradients(
    model: &FlatModel,
    batch: &[(usize, &Instance)],
    seed: u64,
    epoch: usize,
    reduction: LossReduction,
) -> Result<(f64, Gradients)> {
    let parts: Vec<(f64, Gradients)> = batch
        .par_iter()
        .map(|&(index, inst)| {
            let mut g = Graph::training(&model.params, dropout_rng(seed, epoch, index));
            let loss = model.loss(&mut g, inst)?;
            Ok((g.value(loss).get(0, 0), g.backward(loss)?))
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut grads = Gradients::new(model.params.len());
    for (l, g) in parts {
        total += l;
        grads.merge(g);
    }
    let n = batch.len().max(1) as f64;
    if reduction == LossReduction::Mean {
        grads.scale(1.0 / n);
    }
    Ok((total / n, grads))
}

/// Mean dropout-free loss of `insts` under the model's current parameters.
pub fn corpus_loss(model: &FlatModel, insts: &[Instance]) -> Result<f64> {
    let losses: Vec<f64> = insts
        .par_iter()
        .map(|inst| {
            let mut g = Graph::new(&model.params);
            let loss = model.loss(&mut g, inst)?;
            Ok(g.value(loss).get(0, 0))
        })
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / insts.len().max(1) as f64)
}

fn rounded(params: &ParamStore) -> ParamStore {
    let mut p = params.clone();
    p.round_to_f32();
    p
}

/// Trains `model` in place. Every instance in `train` needs gold tags.
///
/// When `dev` is given, it is scored after each epoch with the parameters
/// rounded to single precision, and the best-scoring epoch is kept (earliest
/// on ties). Without `dev` the last epoch is kept.
pub fn train(
    model: &mut FlatModel,
    train: &[Instance],
    dev: Option<&EvalSet>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord, &FlatModel),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if let Some(i) = train.iter().position(|t| t.gold.is_none()) {
        return Err(Error::Structural(format!("training sentence {i} has no gold tags")));
    }
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sgd = Sgd::new(cfg.momentum, model.params.len());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut outcome = TrainOutcome {
        history: Vec::new(),
        best_params: rounded(&model.params),
        best_epoch: 0,
        best_dev_f1: None,
        diverged: None,
    };

    for epoch in 0..cfg.max_epochs {
        let started = Instant::now();
        let lr = cfg.lr_at(epoch);
        let last_good = model.params.clone();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(usize, &Instance)> = chunk.iter().map(|&i| (i, &train[i])).collect();
            let (loss, mut grads) = batch_gradients(model, &batch, cfg.seed, epoch, cfg.loss_reduction)?;
            if !loss.is_finite() {
                model.params = last_good;
                outcome.diverged = Some((epoch, loss));
                return Ok(outcome);
            }
            loss_sum += loss * batch.len() as f64;
            if let Some(clip) = cfg.grad_clip {
                let norm = grads.global_norm();
                if norm > clip {
                    grads.scale(clip / norm);
                }
            }
            sgd.step(&mut model.params, &grads, lr);
        }

        let dev_f1 = match dev {
            Some(set) => {
                let snapshot = rounded(&model.params);
                let engine = InferenceEngine::with_params(model, &snapshot);
                let f1 = evaluate(&engine, model, set, cfg.eval_batch_size)?.f1;
                if outcome.best_dev_f1.is_none_or(|best| f1 > best) {
                    outcome.best_dev_f1 = Some(f1);
                    outcome.best_epoch = epoch;
                    outcome.best_params = snapshot;
                }
                Some(f1)
            }
            None => {
                outcome.best_epoch = epoch;
                outcome.best_params = rounded(&model.params);
                None
            }
        };
        let record = EpochRecord {
            epoch,
            lr,
            loss: loss_sum / train.len() as f64,
            dev_f1,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: lr {lr:.3e} loss {:.5} dev_f1 {:?}",
            record.loss,
            record.dev_f1
        );
        on_epoch(&record, model);
        outcome.history.push(record);
        if let (Some(target), Some(f1)) = (cfg.target_f1, dev_f1) {
            if f1 >= target {
                break;
            }
        }
    }
    Ok(outcome)
}

//! `key = value` settings with environment and command-line overrides.
//!
//! Later sources win: defaults, then the config file, then `FLAT_<KEY>`
//! environment variables, then explicit `key=value` overrides.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::data::Scheme;
use crate::error::{Error, Result};
use crate::model::{DistanceMetric, MaskSpec, ModelConfig};
use crate::train::TrainConfig;

pub const ENV_PREFIX: &str = "FLAT_";

/// Every recognised key, in the order [`Settings::to_text`] writes them.
pub const KEYS: &[&str] = &[
    "d_model",
    "n_heads",
    "ffn_size",
    "n_layers",
    "char_dim",
    "word_dim",
    "embed_dropout",
    "output_dropout",
    "scale_attention",
    "mask",
    "mld_threshold",
    "mld_metric",
    "scheme",
    "batch_size",
    "lr",
    "lr_decay",
    "momentum",
    "warmup_epochs",
    "max_epochs",
    "seed",
    "grad_clip",
    "target_f1",
    "eval_batch_size",
    "loss_reduction",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub scheme: Scheme,
    mask: String,
    mld_threshold: usize,
    mld_metric: DistanceMetric,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            scheme: Scheme::default(),
            mask: "none".into(),
            mld_threshold: MaskSpec::DEFAULT_THRESHOLD,
            mld_metric: DistanceMetric::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

fn parse_opt(key: &str, value: &str) -> Result<Option<f64>> {
    if value.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |v| v.to_string())
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let m = &mut self.model;
        let t = &mut self.train;
        match key {
            "d_model" => m.d_model = parse(key, value)?,
            "n_heads" => m.n_heads = parse(key, value)?,
            "ffn_size" => m.ffn_size = parse(key, value)?,
            "n_layers" => m.n_layers = parse(key, value)?,
            "char_dim" => m.char_dim = parse(key, value)?,
            "word_dim" => m.word_dim = parse(key, value)?,
            "embed_dropout" => m.embed_dropout = parse(key, value)?,
            "output_dropout" => m.output_dropout = parse(key, value)?,
            "scale_attention" => m.scale_attention = parse_bool(key, value)?,
            "mask" => {
                value.parse::<MaskSpec>()?;
                self.mask = value.to_owned();
            }
            "mld_threshold" => self.mld_threshold = parse(key, value)?,
            "mld_metric" => self.mld_metric = value.parse()?,
            "scheme" => self.scheme = value.parse()?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "lr" => t.lr = parse(key, value)?,
            "lr_decay" => t.lr_decay = parse(key, value)?,
            "momentum" => t.momentum = parse(key, value)?,
            "warmup_epochs" => t.warmup_epochs = parse(key, value)?,
            "max_epochs" => t.max_epochs = parse(key, value)?,
            "seed" => t.seed = parse(key, value)?,
            "grad_clip" => t.grad_clip = parse_opt(key, value)?,
            "target_f1" => t.target_f1 = parse_opt(key, value)?,
            "eval_batch_size" => t.eval_batch_size = parse(key, value)?,
            "loss_reduction" => t.loss_reduction = value.parse()?,
            _ => return Err(Error::Config(format!("unknown setting {key:?}"))),
        }
        self.model.mask = self.mask_spec();
        Ok(())
    }

    fn mask_spec(&self) -> MaskSpec {
        match self.mask.parse().expect("validated in set") {
            MaskSpec::LongDistance { .. } => MaskSpec::LongDistance {
                threshold: self.mld_threshold,
                metric: self.mld_metric,
            },
            other => other,
        }
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let (m, t) = (&self.model, &self.train);
        Some(match key {
            "d_model" => m.d_model.to_string(),
            "n_heads" => m.n_heads.to_string(),
            "ffn_size" => m.ffn_size.to_string(),
            "n_layers" => m.n_layers.to_string(),
            "char_dim" => m.char_dim.to_string(),
            "word_dim" => m.word_dim.to_string(),
            "embed_dropout" => m.embed_dropout.to_string(),
            "output_dropout" => m.output_dropout.to_string(),
            "scale_attention" => m.scale_attention.to_string(),
            "mask" => self.mask.clone(),
            "mld_threshold" => self.mld_threshold.to_string(),
            "mld_metric" => self.mld_metric.to_string(),
            "scheme" => self.scheme.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "lr" => t.lr.to_string(),
            "lr_decay" => t.lr_decay.to_string(),
            "momentum" => t.momentum.to_string(),
            "warmup_epochs" => t.warmup_epochs.to_string(),
            "max_epochs" => t.max_epochs.to_string(),
            "seed" => t.seed.to_string(),
            "grad_clip" => fmt_opt(t.grad_clip),
            "target_f1" => fmt_opt(t.target_f1),
            "eval_batch_size" => t.eval_batch_size.to_string(),
            "loss_reduction" => t.loss_reduction.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines. `#` starts a comment; blank lines are
    /// skipped. `origin` names the source in error messages.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(origin, i + 1, "expected `key = value`"));
            };
            self.set(key.trim(), value)
                .map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text, path)
    }

    /// Applies `FLAT_<KEY>` variables (key upper-cased) found by `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        for key in KEYS {
            let var = format!("{ENV_PREFIX}{}", key.to_ascii_uppercase());
            if let Some(value) = lookup(&var) {
                self.set(key, &value)
                    .map_err(|e| Error::Config(format!("{var}: {e}")))?;
            }
        }
        Ok(())
    }

    /// Applies `key=value` strings.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not `key=value`")))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()
    }

    /// All settings as a config file.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which offset the long-distance mask compares against its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DistanceMetric {
    /// `|head_i - head_j|`
    #[default]
    HeadHead,
    /// `|tail_i - tail_j|`
    TailTail,
    /// Smallest absolute value of the four offsets.
    MinOfFour,
}

impl FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hh" => Ok(DistanceMetric::HeadHead),
            "tt" => Ok(DistanceMetric::TailTail),
            "min" => Ok(DistanceMetric::MinOfFour),
            _ => Err(Error::Config(format!(
                "unknown distance metric {s:?} (expected hh, tt, or min)"
            ))),
        }
    }
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceMetric::HeadHead => "hh",
            DistanceMetric::TailTail => "tt",
            DistanceMetric::MinOfFour => "min",
        })
    }
}

/// Attention ablation masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MaskSpec {
    #[default]
    None,
    /// Characters do not attend to the words that contain them.
    SelfMatched,
    /// Spans farther apart than `threshold` do not attend to each other.
    LongDistance {
        threshold: usize,
        metric: DistanceMetric,
    },
}

impl MaskSpec {
    pub const DEFAULT_THRESHOLD: usize = 10;

    pub fn long_distance(threshold: usize) -> Self {
        MaskSpec::LongDistance {
            threshold,
            metric: DistanceMetric::HeadHead,
        }
    }
}

impl FromStr for MaskSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(MaskSpec::None),
            "msm" => Ok(MaskSpec::SelfMatched),
            "mld" => Ok(MaskSpec::long_distance(Self::DEFAULT_THRESHOLD)),
            _ => Err(Error::Config(format!(
                "unknown mask {s:?} (expected none, msm, or mld)"
            ))),
        }
    }
}

impl fmt::Display for MaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskSpec::None => f.write_str("none"),
            MaskSpec::SelfMatched => f.write_str("msm"),
            MaskSpec::LongDistance { .. } => f.write_str("mld"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub ffn_size: usize,
    /// More than one layer is experimental.
    pub n_layers: usize,
    pub char_dim: usize,
    pub word_dim: usize,
    pub embed_dropout: f64,
    pub output_dropout: f64,
    /// Divide attention scores by `sqrt(d_head)`.
    pub scale_attention: bool,
    pub mask: MaskSpec,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_model: 160,
            n_heads: 8,
            ffn_size: 480,
            n_layers: 1,
            char_dim: 50,
            word_dim: 50,
            embed_dropout: 0.5,
            output_dropout: 0.3,
            scale_attention: true,
            mask: MaskSpec::None,
        }
    }
}

impl ModelConfig {
    pub fn d_head(&self) -> usize {
        self.d_model / self.n_heads.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        crate::position::check_dim(self.d_model)?;
        let positive = [
            ("n_heads", self.n_heads),
            ("ffn_size", self.ffn_size),
            ("n_layers", self.n_layers),
            ("char_dim", self.char_dim),
            ("word_dim", self.word_dim),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::Config(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        for (name, p) in [
            ("embed_dropout", self.embed_dropout),
            ("output_dropout", self.output_dropout),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0, 1), got {p}")));
            }
        }
        if self.n_layers > 1 {
            log::warn!("n_layers = {} is experimental", self.n_layers);
        }
        Ok(())
    }
}

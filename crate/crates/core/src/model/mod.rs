//! The flat-lattice encoder, its output layer, and batched inference.

mod config;
mod encoder;
mod flat;
mod infer;
mod mask;

pub use config::{DistanceMetric, MaskSpec, ModelConfig};
pub use encoder::{attention_scores, attention_weights};
pub use flat::{FlatModel, HeadIds, Instance, LayerIds, ParamIds};
pub use infer::InferenceEngine;
pub use mask::attention_mask;

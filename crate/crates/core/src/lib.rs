//! Flat-lattice transformer for lexicon-augmented character sequence labeling.
//!
//! A sentence and a lexicon give a lattice of characters and matched words.
//! The lattice is flattened into spans with head and tail positions, encoded
//! by self-attention over relative span offsets, and decoded by a
//! linear-chain CRF over the character positions.

pub mod bench;
pub mod config;
pub mod crf;
pub mod data;
mod error;
pub mod lexicon;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod position;
pub mod synthetic;
pub mod train;

pub use crf::Crf;
pub use data::{Entity, Scheme, TaggedSentence, Vocab};
pub use error::{Error, Result};
pub use lexicon::{FlatLattice, LatticeGraph, Span, SpanKind, Trie};
pub use metrics::Scores;
pub use model::{FlatModel, InferenceEngine, Instance, MaskSpec, ModelConfig};
pub use numerics::{ParamStore, Tensor};
pub use position::{DistanceMatrices, RelPosEncoding};
pub use train::{TrainConfig, TrainOutcome};

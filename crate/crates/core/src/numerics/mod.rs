//! Dense matrices, reverse-mode gradients, and parameter storage.

pub mod checkpoint;
mod gradcheck;
mod graph;
mod params;
mod tensor;

pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport, ParamCheck, Stencil};
pub use graph::{Graph, Var};
pub use params::{Gradients, Init, ParamId, ParamStore, Parameter};
pub use tensor::{dot, log_sum_exp, masked_softmax_in_place, Tensor};
pub(crate) use tensor::{layer_norm_row, matmul_row};

//! Minimal differentiable toolkit: tensors, a reverse-mode tape, parameter
//! storage with AdamW, layers and losses.

pub mod layers;
pub mod params;
pub mod tape;
pub mod tensor;

pub use layers::{grad_check, layernorm, linear, mlp, softmax, GradCheck, GradCheckReport};
pub use params::{AdamW, Checkpoint, ParamStore};
pub use tape::{CustomOp, Gradients, Tape, Var};
pub use tensor::Tensor;

/// Smooth-L1 transition point.
pub const SMOOTH_L1_BETA: f64 = 1.0;

//! Minimal differentiable kernel.
//!
//! There is no autodiff graph: every layer exposes a forward function and a
//! matching backward function, and the networks built on top chain them by
//! hand. Parameters and their gradients live in a [`ParamStore`].

mod ops;
mod params;
mod tensor;

pub use ops::{
    argmax, column_sum, concat_context, concat_context_backward, cross_entropy, cross_entropy_grad,
    dot, mse, sample_categorical, sigmoid, softmax, softmax_backward, Activation, Linear, PROB_EPS,
};
pub use params::{Init, Optimizer, Param, ParamId, ParamStore};
pub use tensor::Tensor2D;

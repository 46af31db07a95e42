//! Small reverse-mode automatic differentiation engine over dense f64 tensors.
//!
//! A [`Tape`] records every operation; [`Tape::detach`] cuts the gradient
//! path while keeping the value, which is how the target branch of the
//! self-supervised losses is held fixed.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, grad_check_with, relative_error, CoordinateMismatch, GradCheckReport, REL_ERROR_FLOOR};
pub use tape::{Axis, BatchStats, Gradients, Tape, Var};
pub use tensor::Tensor;

pub(crate) use tape::softplus_value;

#[cfg(test)]
mod tests;

//! Trainable layers with hand-derived backward passes.
//!
//! All layers are linear in their input, so the input gradient of each is
//! the adjoint operator applied to the output gradient.

mod conv2d;
pub mod gradcheck;
mod ops;
mod pconv;
mod sgd;

pub use conv2d::Conv2DLayer;
pub use ops::{euclidean_loss, sum_backward, sum_forward};
pub use pconv::{Normalization, PConvLayer};
pub use sgd::Sgd;

//! Splat, lattice convolution and slice over a sparse permutohedral frame.

mod frame;
mod kernel;
pub mod oracle;
mod signal;

pub use frame::{inverse_density, PermutohedralFrame, NO_NODE};
pub use kernel::{gaussian_kernel, Kernel};
pub use oracle::{dense_oracle, DenseMatrix};
pub use signal::SignalMatrix;

use crate::error::Result;
use crate::features::FeatureSet;

pub fn build_frame(
    features_in: &FeatureSet,
    features_out: &FeatureSet,
    s: usize,
) -> Result<PermutohedralFrame> {
    PermutohedralFrame::build(features_in, features_out, s)
}

//! Learnable convolutions on the permutohedral lattice.
//!
//! Sparse samples `(f_i, v_i)` with features in `R^d` are splatted onto the
//! vertices of their enclosing lattice simplices, convolved with a filter
//! over lattice offsets, and sliced back at arbitrary output features.

pub mod autodiff;
pub mod demos;
pub mod denoise;
pub mod error;
pub mod features;
pub mod filterbank;
pub mod imaging;
pub mod lattice;
pub mod rng;

pub use error::{Error, Result};
pub use features::FeatureSet;
pub use filterbank::{build_frame, gaussian_kernel, Kernel, PermutohedralFrame, SignalMatrix};
pub use imaging::GrayImage;
pub use lattice::{elevate, locate, neighbor_offsets, LatticeKey, LatticeMap, OffsetTable};

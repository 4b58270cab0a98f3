//! Dense reference for the filtering pipeline, for tests on small instances.
//!
//! Splat and slice matrices are rebuilt from fresh `locate` calls and key
//! lookups, and the convolution matrix from pairwise key differences, so the
//! product is independent of the frame's entry lists and neighbor table.

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::lattice::{elevate, locate, LatticeKey};

use super::{Kernel, PermutohedralFrame};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }
}

/// Interpolation matrix `samples x nodes` (one channel) from scratch.
pub fn interpolation_matrix(
    frame: &PermutohedralFrame,
    features: &FeatureSet,
) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(features.len(), frame.node_count());
    for (i, f) in features.iter().enumerate() {
        let loc = locate(&elevate(f)?)?;
        for (v, b) in loc.vertices.iter().zip(&loc.barycentric) {
            let j = frame
                .lattice()
                .lookup(v)
                .ok_or_else(|| Error::invalid("feature touches a node outside the frame"))?;
            out.add(i, j, *b);
        }
    }
    Ok(out)
}

/// Convolution matrix `(M c_out) x (M c_in)`, built by matching every node
/// pair's key difference against the offset list.
pub fn convolution_matrix(frame: &PermutohedralFrame, kernel: &Kernel) -> Result<DenseMatrix> {
    kernel.check_offsets(frame.offsets())?;
    let m = frame.node_count();
    let (c_out, c_in) = (kernel.c_out(), kernel.c_in());
    let keys: Vec<LatticeKey> = (0..m).map(|j| frame.lattice().key(j)).collect();
    let offsets = frame.offsets();
    let mut out = DenseMatrix::zeros(m * c_out, m * c_in);
    let mut diff = vec![0i32; frame.dim() + 1];
    for (jo, ko) in keys.iter().enumerate() {
        for (ji, ki) in keys.iter().enumerate() {
            for ((d, a), b) in diff.iter_mut().zip(ki.coords()).zip(ko.coords()) {
                *d = a - b;
            }
            let Some(n) = (0..offsets.len()).find(|&n| offsets.offset(n) == diff.as_slice()) else {
                continue;
            };
            for co in 0..c_out {
                for ci in 0..c_in {
                    out.add(jo * c_out + co, ji * c_in + ci, kernel.get(co, ci, n));
                }
            }
        }
    }
    Ok(out)
}

/// Expands a one-channel `rows x cols` matrix to act on `c` interleaved channels.
pub fn expand_channels(m: &DenseMatrix, c: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.rows * c, m.cols * c);
    for i in 0..m.rows {
        for j in 0..m.cols {
            let v = m.get(i, j);
            for ch in 0..c {
                out.add(i * c + ch, j * c + ch, v);
            }
        }
    }
    out
}

/// `Slice * Conv * Splat` as one dense `(N_out c_out) x (N_in c_in)` matrix.
///
/// Row index is `k * c_out + co`, column index `i * c_in + ci`, matching the
/// row-major layout of [`SignalMatrix`](super::SignalMatrix).
pub fn dense_oracle(
    frame: &PermutohedralFrame,
    features_in: &FeatureSet,
    features_out: &FeatureSet,
    kernel: &Kernel,
) -> Result<DenseMatrix> {
    let splat = interpolation_matrix(frame, features_in)?.transpose();
    let slice = interpolation_matrix(frame, features_out)?;
    let conv = convolution_matrix(frame, kernel)?;
    let splat = expand_channels(&splat, kernel.c_in());
    let slice = expand_channels(&slice, kernel.c_out());
    Ok(slice.matmul(&conv.matmul(&splat)))
}

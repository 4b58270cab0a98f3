use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::lattice::{neighbor_offsets, LatticeMap, Locator, OffsetTable};

use super::{Kernel, SignalMatrix};

/// Marker for an offset neighbor that is not part of the node set.
pub const NO_NODE: u32 = u32::MAX;

/// Sparse lattice structure binding an input and an output feature set.
///
/// Nodes are every simplex vertex touched by an input or an output feature,
/// numbered in order of first touch (inputs before outputs).
#[derive(Clone, Debug)]
pub struct PermutohedralFrame {
    d: usize,
    offsets: OffsetTable,
    map: LatticeMap,
    n_in: usize,
    n_out: usize,
    splat_nodes: Vec<u32>,
    splat_weights: Vec<f64>,
    slice_nodes: Vec<u32>,
    slice_weights: Vec<f64>,
    neighbors: Vec<u32>,
}

fn locate_all(
    features: &FeatureSet,
    locator: &mut Locator,
    map: &mut LatticeMap,
) -> Result<(Vec<u32>, Vec<f64>)> {
    let n = features.dim() + 1;
    let mut nodes = Vec::with_capacity(features.len() * n);
    let mut weights = Vec::with_capacity(features.len() * n);
    for f in features.iter() {
        locator.locate_feature(f)?;
        for k in 0..n {
            nodes.push(map.insert_coords(locator.vertex(k)) as u32);
        }
        weights.extend_from_slice(locator.barycentric());
    }
    Ok((nodes, weights))
}

impl PermutohedralFrame {
    pub fn build(features_in: &FeatureSet, features_out: &FeatureSet, s: usize) -> Result<Self> {
        if features_in.is_empty() || features_out.is_empty() {
            return Err(Error::invalid("feature lists must be non-empty"));
        }
        let d = features_in.dim();
        if features_out.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: features_out.dim(),
            });
        }
        let offsets = neighbor_offsets(d, s)?;
        let mut map = LatticeMap::with_capacity(d, features_in.len() + features_out.len());
        let mut locator = Locator::new(d);
        let (splat_nodes, splat_weights) = locate_all(features_in, &mut locator, &mut map)?;
        let (slice_nodes, slice_weights) = locate_all(features_out, &mut locator, &mut map)?;

        let m = map.len();
        let taps = offsets.len();
        let mut neighbors = Vec::with_capacity(m * taps);
        let mut probe = vec![0i32; d];
        for j in 0..m {
            let base = map.leading(j).to_vec();
            for o in offsets.iter() {
                for ((p, b), off) in probe.iter_mut().zip(&base).zip(o) {
                    *p = b + off;
                }
                neighbors.push(map.lookup_coords(&probe).map_or(NO_NODE, |x| x as u32));
            }
        }

        Ok(Self {
            d,
            offsets,
            map,
            n_in: features_in.len(),
            n_out: features_out.len(),
            splat_nodes,
            splat_weights,
            slice_nodes,
            slice_weights,
            neighbors,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn neighborhood(&self) -> usize {
        self.offsets.neighborhood()
    }

    pub fn node_count(&self) -> usize {
        self.map.len()
    }

    pub fn input_count(&self) -> usize {
        self.n_in
    }

    pub fn output_count(&self) -> usize {
        self.n_out
    }

    pub fn offsets(&self) -> &OffsetTable {
        &self.offsets
    }

    pub fn lattice(&self) -> &LatticeMap {
        &self.map
    }

    /// `(input sample, node, weight)` triples.
    pub fn splat_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.d + 1;
        self.splat_nodes
            .iter()
            .zip(&self.splat_weights)
            .enumerate()
            .map(move |(e, (&j, &b))| (e / n, j as usize, b))
    }

    /// `(output sample, node, weight)` triples.
    pub fn slice_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.d + 1;
        self.slice_nodes
            .iter()
            .zip(&self.slice_weights)
            .enumerate()
            .map(move |(e, (&j, &b))| (e / n, j as usize, b))
    }

    /// Node reached from `node` by offset `n`, if present.
    pub fn neighbor(&self, node: usize, n: usize) -> Option<usize> {
        match self.neighbors[node * self.offsets.len() + n] {
            NO_NODE => None,
            j => Some(j as usize),
        }
    }

    /// Row of the neighbor table for `node`; absent entries are [`NO_NODE`].
    pub fn neighbor_row(&self, node: usize) -> &[u32] {
        let t = self.offsets.len();
        &self.neighbors[node * t..(node + 1) * t]
    }

    /// `l_j = sum_i b_ij v_i`.
    pub fn splat(&self, values: &SignalMatrix) -> Result<SignalMatrix> {
        self.check_rows(values, self.n_in, "splat input")?;
        Ok(scatter(
            &self.splat_nodes,
            &self.splat_weights,
            self.d + 1,
            values,
            self.node_count(),
        ))
    }

    /// `v'_k = sum_j b_kj l_j`.
    pub fn slice(&self, lattice: &SignalMatrix) -> Result<SignalMatrix> {
        self.check_rows(lattice, self.node_count(), "slice input")?;
        Ok(gather(
            &self.slice_nodes,
            &self.slice_weights,
            self.d + 1,
            lattice,
        ))
    }

    /// Transpose of [`splat`](Self::splat): lattice rows back to input samples.
    pub fn splat_adjoint(&self, lattice: &SignalMatrix) -> Result<SignalMatrix> {
        self.check_rows(lattice, self.node_count(), "splat adjoint input")?;
        Ok(gather(
            &self.splat_nodes,
            &self.splat_weights,
            self.d + 1,
            lattice,
        ))
    }

    /// Transpose of [`slice`](Self::slice): output samples onto the lattice.
    pub fn slice_adjoint(&self, values: &SignalMatrix) -> Result<SignalMatrix> {
        self.check_rows(values, self.n_out, "slice adjoint input")?;
        Ok(scatter(
            &self.slice_nodes,
            &self.slice_weights,
            self.d + 1,
            values,
            self.node_count(),
        ))
    }

    /// `l'_{j', co} = sum_n sum_ci w[co, ci, n] l_{nbr(j', n), ci}`; absent
    /// neighbors contribute nothing.
    pub fn convolve(&self, lattice: &SignalMatrix, kernel: &Kernel) -> Result<SignalMatrix> {
        kernel.check_offsets(&self.offsets)?;
        self.check_rows(lattice, self.node_count(), "convolution input")?;
        if lattice.cols() != kernel.c_in() {
            return Err(Error::shape(format!(
                "{} lattice channels for a kernel with {} inputs",
                lattice.cols(),
                kernel.c_in()
            )));
        }
        let (c_in, c_out) = (kernel.c_in(), kernel.c_out());
        let taps = self.offsets.len();
        let w = kernel.weights();
        let mut out = SignalMatrix::zeros(self.node_count(), c_out);
        for (j, acc) in out.as_mut_slice().chunks_exact_mut(c_out).enumerate() {
            for (n, &nb) in self.neighbor_row(j).iter().enumerate() {
                if nb == NO_NODE {
                    continue;
                }
                let src = lattice.row(nb as usize);
                for (co, a) in acc.iter_mut().enumerate() {
                    for (ci, x) in src.iter().enumerate() {
                        *a += w[(co * c_in + ci) * taps + n] * x;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Gradient of `<g, convolve(l, w)>` with respect to `w`.
    pub fn kernel_gradient(
        &self,
        grad_lattice: &SignalMatrix,
        lattice: &SignalMatrix,
    ) -> Result<Vec<f64>> {
        let m = self.node_count();
        self.check_rows(grad_lattice, m, "lattice gradient")?;
        self.check_rows(lattice, m, "cached lattice signal")?;
        let (c_out, c_in) = (grad_lattice.cols(), lattice.cols());
        let taps = self.offsets.len();
        let mut grad = vec![0.0; c_out * c_in * taps];
        for j in 0..m {
            let g = grad_lattice.row(j);
            for (n, &nb) in self.neighbor_row(j).iter().enumerate() {
                if nb == NO_NODE {
                    continue;
                }
                let src = lattice.row(nb as usize);
                for (co, gv) in g.iter().enumerate() {
                    for (ci, x) in src.iter().enumerate() {
                        grad[(co * c_in + ci) * taps + n] += gv * x;
                    }
                }
            }
        }
        Ok(grad)
    }

    /// Full forward pipeline `slice(convolve(splat(values)))`.
    pub fn filter(&self, values: &SignalMatrix, kernel: &Kernel) -> Result<SignalMatrix> {
        let l = self.splat(values)?;
        let l = self.convolve(&l, kernel)?;
        self.slice(&l)
    }

    /// Per-output response of a 1x1 kernel to an all-ones input.
    ///
    /// This is the homogeneous weight used to turn the raw pipeline into a
    /// normalized (bilateral-style) filter.
    pub fn density(&self, kernel: &Kernel) -> Result<Vec<f64>> {
        if kernel.c_in() != 1 || kernel.c_out() != 1 {
            return Err(Error::shape("density needs a single-channel kernel"));
        }
        let ones = SignalMatrix::filled(self.n_in, 1, 1.0);
        Ok(self.filter(&ones, kernel)?.into_vec())
    }

    /// Normalized filtering: each channel is filtered by the 1x1 `kernel`
    /// and divided by the filtered all-ones signal. Outputs with no support
    /// (non-positive density) are set to zero.
    pub fn filter_normalized(
        &self,
        values: &SignalMatrix,
        kernel: &Kernel,
    ) -> Result<SignalMatrix> {
        let density = self.density(kernel)?;
        let wide = Kernel::diagonal(kernel, values.cols())?;
        let mut out = self.filter(values, &wide)?;
        for (k, &w) in density.iter().enumerate() {
            let scale = inverse_density(w);
            out.row_mut(k).iter_mut().for_each(|x| *x *= scale);
        }
        Ok(out)
    }

    fn check_rows(&self, m: &SignalMatrix, rows: usize, what: &str) -> Result<()> {
        if m.rows() != rows {
            return Err(Error::shape(format!(
                "{what} has {} rows, expected {rows}",
                m.rows()
            )));
        }
        Ok(())
    }
}

/// `1/w` for positive densities, 0 where the filter has no support.
pub fn inverse_density(w: f64) -> f64 {
    if w > 1e-300 {
        1.0 / w
    } else {
        0.0
    }
}

fn scatter(
    nodes: &[u32],
    weights: &[f64],
    n: usize,
    values: &SignalMatrix,
    m: usize,
) -> SignalMatrix {
    let c = values.cols();
    let mut out = SignalMatrix::zeros(m, c);
    let data = out.as_mut_slice();
    for (i, (ns, bs)) in nodes
        .chunks_exact(n)
        .zip(weights.chunks_exact(n))
        .enumerate()
    {
        let v = values.row(i);
        for (&j, &b) in ns.iter().zip(bs) {
            let dst = &mut data[j as usize * c..(j as usize + 1) * c];
            for (o, x) in dst.iter_mut().zip(v) {
                *o += b * x;
            }
        }
    }
    out
}

fn gather(nodes: &[u32], weights: &[f64], n: usize, lattice: &SignalMatrix) -> SignalMatrix {
    let c = lattice.cols();
    let rows = nodes.len() / n;
    let mut out = SignalMatrix::zeros(rows, c);
    for (dst, (ns, bs)) in out
        .as_mut_slice()
        .chunks_exact_mut(c.max(1))
        .zip(nodes.chunks_exact(n).zip(weights.chunks_exact(n)))
    {
        for (&j, &b) in ns.iter().zip(bs) {
            for (o, x) in dst.iter_mut().zip(lattice.row(j as usize)) {
                *o += b * x;
            }
        }
    }
    out
}

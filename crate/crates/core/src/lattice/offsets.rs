use std::collections::HashMap;

use crate::error::{Error, Result};

/// The neighborhood of a lattice point: all offsets `sum_i c_i u_i` with
/// `c in {0..=s}^{d+1}` and `min(c) = 0`, where `u_i = (d+1) e_i - 1`.
///
/// Offsets are stored in lexicographic order of their coefficient vector `c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OffsetTable {
    d: usize,
    s: usize,
    coeffs: Vec<u32>,
    offsets: Vec<i32>,
    zero_index: usize,
    negation: Vec<usize>,
}

impl OffsetTable {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn neighborhood(&self) -> usize {
        self.s
    }

    pub fn len(&self) -> usize {
        self.negation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.negation.is_empty()
    }

    /// The `n`-th offset as a `(d+1)`-vector.
    pub fn offset(&self, n: usize) -> &[i32] {
        let w = self.d + 1;
        &self.offsets[n * w..(n + 1) * w]
    }

    /// Generating coefficients of the `n`-th offset.
    pub fn coefficients(&self, n: usize) -> &[u32] {
        let w = self.d + 1;
        &self.coeffs[n * w..(n + 1) * w]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i32]> + '_ {
        self.offsets.chunks_exact(self.d + 1)
    }

    pub fn zero_index(&self) -> usize {
        self.zero_index
    }

    /// Index of `-offset(n)`.
    pub fn negated(&self, n: usize) -> usize {
        self.negation[n]
    }

    pub fn negation_map(&self) -> &[usize] {
        &self.negation
    }

    /// Squared Euclidean norm of the `n`-th offset in elevated coordinates.
    pub fn norm_squared(&self, n: usize) -> f64 {
        self.offset(n)
            .iter()
            .map(|&o| (o as f64) * (o as f64))
            .sum()
    }
}

/// `(s+1)^{d+1} - s^{d+1}`, the size of an `s`-neighborhood.
pub fn neighborhood_size(d: usize, s: usize) -> usize {
    (s + 1).pow(d as u32 + 1) - s.pow(d as u32 + 1)
}

pub(crate) fn neighborhood_size_checked(d: usize, s: usize) -> Result<usize> {
    let e = u32::try_from(d + 1).map_err(|_| Error::invalid("dimension too large"))?;
    (s + 1)
        .checked_pow(e)
        .map(|big| big - s.pow(e))
        .ok_or_else(|| Error::invalid("neighborhood too large"))
}

pub fn neighbor_offsets(d: usize, s: usize) -> Result<OffsetTable> {
    if d == 0 {
        return Err(Error::invalid("lattice dimension must be at least 1"));
    }
    let w = d + 1;
    let base = s + 1;
    let total = base
        .checked_pow(w as u32)
        .ok_or_else(|| Error::invalid("neighborhood too large"))?;

    let mut coeffs = Vec::new();
    let mut offsets = Vec::new();
    let mut index_of: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut c = vec![0u32; w];
    for code in 0..total {
        // Most significant digit first gives lexicographic order.
        let mut rest = code;
        for slot in c.iter_mut().rev() {
            *slot = (rest % base) as u32;
            rest /= base;
        }
        if c.iter().copied().min() != Some(0) {
            continue;
        }
        let total_c: i64 = c.iter().map(|&x| x as i64).sum();
        index_of.insert(c.clone(), index_of.len());
        coeffs.extend_from_slice(&c);
        offsets.extend(c.iter().map(|&ci| (ci as i64 * w as i64 - total_c) as i32));
    }

    let count = index_of.len();
    let mut negation = vec![0; count];
    let mut neg = vec![0u32; w];
    for (n, slot) in negation.iter_mut().enumerate() {
        let cn = &coeffs[n * w..(n + 1) * w];
        let top = *cn.iter().max().unwrap();
        for (o, &x) in neg.iter_mut().zip(cn) {
            *o = top - x;
        }
        *slot = index_of[&neg];
    }

    Ok(OffsetTable {
        d,
        s,
        coeffs,
        offsets,
        zero_index: 0,
        negation,
    })
}

//! Geometry of the permutohedral lattice.
//!
//! Features in `R^d` are elevated into the hyperplane `{x in R^{d+1} : sum(x) = 0}`,
//! scaled so that the lattice spacing is roughly one feature unit. Lattice
//! points there are integer vectors whose coordinates all share one residue
//! modulo `d + 1` (the point's *remainder*). Every elevated point lies in a
//! simplex with exactly one vertex of each remainder `0..=d`.

mod map;
mod offsets;

pub use map::LatticeMap;
pub(crate) use offsets::neighborhood_size_checked;
pub use offsets::{neighbor_offsets, neighborhood_size, OffsetTable};

use crate::error::{Error, Result};

/// Largest elevated coordinate magnitude accepted; keeps keys inside `i32`.
const MAX_ELEVATED: f64 = 1.0e9;

/// A feature location elevated into the zero-sum hyperplane of `R^{d+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElevatedPoint(Vec<f64>);

impl ElevatedPoint {
    /// Wraps raw coordinates, checking finiteness and the zero-sum constraint.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::invalid(
                "elevated point needs at least 2 coordinates",
            ));
        }
        check_finite(&coords)?;
        let sum: f64 = coords.iter().sum();
        let scale = coords.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if sum.abs() > 1e-9 * (1.0 + scale) {
            return Err(Error::invalid(format!(
                "elevated coordinates sum to {sum}, not 0"
            )));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Dimension of the feature space (`len - 1`).
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }
}

/// Integer coordinates of a lattice point in the elevated frame.
///
/// All `d + 1` entries are kept; they sum to zero and share one residue
/// modulo `d + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeKey(Vec<i32>);

impl LatticeKey {
    pub fn new(coords: Vec<i32>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::invalid("lattice key needs at least 2 coordinates"));
        }
        let n = coords.len() as i64;
        let sum: i64 = coords.iter().map(|&c| c as i64).sum();
        if sum != 0 {
            return Err(Error::invalid(format!("lattice key sums to {sum}")));
        }
        let r = (coords[0] as i64).rem_euclid(n);
        if coords.iter().any(|&c| (c as i64).rem_euclid(n) != r) {
            return Err(Error::invalid(
                "lattice key coordinates differ in remainder",
            ));
        }
        Ok(Self(coords))
    }

    /// Builds a key from its first `d` coordinates.
    pub fn from_leading(leading: &[i32]) -> Result<Self> {
        let last = -leading.iter().map(|&c| c as i64).sum::<i64>();
        let last = i32::try_from(last).map_err(|_| Error::invalid("lattice key overflow"))?;
        let mut coords = leading.to_vec();
        coords.push(last);
        Self::new(coords)
    }

    pub(crate) fn from_raw(coords: Vec<i32>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    /// The shared residue of the coordinates modulo `d + 1`.
    pub fn remainder(&self) -> usize {
        (self.0[0] as i64).rem_euclid(self.0.len() as i64) as usize
    }

    pub fn embedded(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }
}

/// The simplex enclosing an elevated point.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexLocation {
    /// `vertices[k]` is the remainder-`k` corner.
    pub vertices: Vec<LatticeKey>,
    /// `barycentric[k]` weights `vertices[k]`.
    pub barycentric: Vec<f64>,
    /// Position of each coordinate in the descending order of the residual.
    pub rank: Vec<usize>,
}

fn check_finite(xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::invalid(format!(
            "non-finite coordinate at index {i}"
        ))),
        None => Ok(()),
    }
}

/// Per-axis elevation factors `sqrt(2/3) (d+1) / sqrt((i+1)(i+2))`.
pub fn elevation_scales(d: usize) -> Vec<f64> {
    let pre = (2.0f64 / 3.0).sqrt() * (d + 1) as f64;
    (0..d)
        .map(|i| pre / (((i + 1) * (i + 2)) as f64).sqrt())
        .collect()
}

/// Elevates a `d`-dimensional feature into the zero-sum hyperplane of `R^{d+1}`.
pub fn elevate(feature: &[f64]) -> Result<ElevatedPoint> {
    if feature.is_empty() {
        return Err(Error::invalid("feature dimension must be at least 1"));
    }
    check_finite(feature)?;
    let mut out = vec![0.0; feature.len() + 1];
    elevate_into(feature, &elevation_scales(feature.len()), &mut out);
    Ok(ElevatedPoint(out))
}

fn elevate_into(feature: &[f64], scales: &[f64], out: &mut [f64]) {
    let d = feature.len();
    let mut sum = 0.0;
    for i in (1..=d).rev() {
        let cf = feature[i - 1] * scales[i - 1];
        out[i] = sum - i as f64 * cf;
        sum += cf;
    }
    out[0] = sum;
}

/// Inverse of [`elevate`] on the zero-sum hyperplane.
pub fn feature_from_elevated(point: &[f64]) -> Vec<f64> {
    let d = point.len().saturating_sub(1);
    let scales = elevation_scales(d);
    let mut feature = vec![0.0; d];
    let mut sum = 0.0;
    for i in (1..=d).rev() {
        let cf = (sum - point[i]) / i as f64;
        feature[i - 1] = cf / scales[i - 1];
        sum += cf;
    }
    feature
}

/// Finds the enclosing simplex of an elevated point.
pub fn locate(point: &ElevatedPoint) -> Result<SimplexLocation> {
    let d = point.dim();
    let mut loc = Locator::new(d);
    loc.locate_elevated(point.coords())?;
    let n = d + 1;
    let vertices = (0..n)
        .map(|k| LatticeKey::from_raw(loc.vertex(k).to_vec()))
        .collect();
    Ok(SimplexLocation {
        vertices,
        barycentric: loc.barycentric().to_vec(),
        rank: loc.rank.iter().map(|&r| r as usize).collect(),
    })
}

/// Reusable scratch space for locating many points of one dimension.
#[derive(Clone, Debug)]
pub(crate) struct Locator {
    d: usize,
    scales: Vec<f64>,
    elevated: Vec<f64>,
    rem0: Vec<i64>,
    rank: Vec<i64>,
    bary: Vec<f64>,
    keys: Vec<i32>,
}

impl Locator {
    pub(crate) fn new(d: usize) -> Self {
        let n = d + 1;
        Self {
            d,
            scales: elevation_scales(d),
            elevated: vec![0.0; n],
            rem0: vec![0; n],
            rank: vec![0; n],
            bary: vec![0.0; n + 1],
            keys: vec![0; n * n],
        }
    }

    /// Elevates and locates a raw feature.
    pub(crate) fn locate_feature(&mut self, feature: &[f64]) -> Result<()> {
        if feature.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: feature.len(),
            });
        }
        check_finite(feature)?;
        let mut elevated = std::mem::take(&mut self.elevated);
        elevate_into(feature, &self.scales, &mut elevated);
        let res = self.locate_elevated(&elevated);
        self.elevated = elevated;
        res
    }

    pub(crate) fn locate_elevated(&mut self, y: &[f64]) -> Result<()> {
        let d = self.d;
        let n = d + 1;
        debug_assert_eq!(y.len(), n);
        check_finite(y)?;
        if y.iter().any(|c| c.abs() > MAX_ELEVATED) {
            return Err(Error::invalid(
                "feature coordinates out of range for lattice keys",
            ));
        }
        let step = n as f64;

        // Nearest multiple of (d+1) per coordinate.
        let mut sum = 0i64;
        for i in 0..n {
            let v = y[i] / step;
            let up = v.ceil() * step;
            let down = v.floor() * step;
            let r = if up - y[i] < y[i] - down { up } else { down };
            self.rem0[i] = r as i64;
            sum += self.rem0[i] / n as i64;
        }

        // Rank coordinates by descending residual, ties to the lower index.
        self.rank.iter_mut().for_each(|r| *r = 0);
        for i in 0..d {
            let di = y[i] - self.rem0[i] as f64;
            for j in (i + 1)..n {
                let dj = y[j] - self.rem0[j] as f64;
                if di < dj {
                    self.rank[i] += 1;
                } else {
                    self.rank[j] += 1;
                }
            }
        }

        // Restore the zero-sum constraint by moving the coordinates that
        // overshot the most back by one multiple.
        for i in 0..n {
            self.rank[i] += sum;
            if self.rank[i] < 0 {
                self.rank[i] += n as i64;
                self.rem0[i] += n as i64;
            } else if self.rank[i] > d as i64 {
                self.rank[i] -= n as i64;
                self.rem0[i] -= n as i64;
            }
        }

        self.bary.iter_mut().for_each(|b| *b = 0.0);
        for i in 0..n {
            let delta = (y[i] - self.rem0[i] as f64) / step;
            let r = self.rank[i] as usize;
            self.bary[d - r] += delta;
            self.bary[n - r] -= delta;
        }
        self.bary[0] += 1.0 + self.bary[n];

        for k in 0..n {
            for i in 0..n {
                let shift = if (self.rank[i] as usize) < n - k {
                    k as i64
                } else {
                    k as i64 - n as i64
                };
                self.keys[k * n + i] = (self.rem0[i] + shift) as i32;
            }
        }
        Ok(())
    }

    pub(crate) fn vertex(&self, k: usize) -> &[i32] {
        let n = self.d + 1;
        &self.keys[k * n..(k + 1) * n]
    }

    pub(crate) fn barycentric(&self) -> &[f64] {
        &self.bary[..=self.d]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(loc: &SimplexLocation) -> Vec<f64> {
        let n = loc.vertices.len();
        let mut out = vec![0.0; n];
        for (v, b) in loc.vertices.iter().zip(&loc.barycentric) {
            for (o, c) in out.iter_mut().zip(v.coords()) {
                *o += b * *c as f64;
            }
        }
        out
    }

    #[test]
    fn origin_elevates_to_origin() {
        let y = elevate(&[0.0, 0.0, 0.0]).unwrap();
        assert!(y.coords().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn one_dimensional_elevation() {
        // alpha_0 = sqrt(2/3) * 2 / sqrt(2) = 2 / sqrt(3)
        let y = elevate(&[1.0]).unwrap();
        let a = 2.0 / 3.0f64.sqrt();
        assert!((y.coords()[0] - a).abs() < 1e-15);
        assert!((y.coords()[1] + a).abs() < 1e-15);
    }

    #[test]
    fn elevation_is_zero_sum() {
        let y = elevate(&[0.3, -2.7, 11.0]).unwrap();
        assert!(y.coords().iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(elevate(&[f64::NAN]), Err(Error::InvalidInput(_))));
        assert!(matches!(
            elevate(&[1.0, f64::INFINITY]),
            Err(Error::InvalidInput(_))
        ));
        assert!(elevate(&[]).is_err());
    }

    #[test]
    fn lattice_point_is_its_own_vertex() {
        // (4, -4, 8, -8) is a remainder-0 point for d = 3.
        let y = ElevatedPoint::new(vec![4.0, -4.0, 8.0, -8.0]).unwrap();
        let loc = locate(&y).unwrap();
        assert_eq!(loc.vertices[0].coords(), &[4, -4, 8, -8]);
        assert!((loc.barycentric[0] - 1.0).abs() < 1e-12);
        for b in &loc.barycentric[1..] {
            assert!(b.abs() < 1e-12);
        }
    }

    #[test]
    fn centroid_has_uniform_weights() {
        // Centroid of the canonical simplex for d = 2: mean of (0,0,0),
        // (1,1,-2) and (2,-1,-1).
        let y = ElevatedPoint::new(vec![1.0, 0.0, -1.0]).unwrap();
        let loc = locate(&y).unwrap();
        for b in &loc.barycentric {
            assert!((b - 1.0 / 3.0).abs() < 1e-9, "{:?}", loc.barycentric);
        }
        let rec = reconstruct(&loc);
        for (r, c) in rec.iter().zip(y.coords()) {
            assert!((r - c).abs() < 1e-9);
        }
    }

    #[test]
    fn vertices_carry_their_remainder() {
        let y = elevate(&[0.37, 1.91, -0.42]).unwrap();
        let loc = locate(&y).unwrap();
        for (k, v) in loc.vertices.iter().enumerate() {
            assert_eq!(v.remainder(), k);
            assert!(LatticeKey::new(v.coords().to_vec()).is_ok());
        }
    }

    #[test]
    fn key_validation() {
        assert!(LatticeKey::new(vec![3, -3]).is_ok());
        assert!(LatticeKey::new(vec![1, 0, -1]).is_err());
        assert!(LatticeKey::new(vec![2, -2]).is_ok());
        assert!(LatticeKey::new(vec![1, 1, -2]).is_ok());
        assert!(LatticeKey::new(vec![1, 2, -3]).is_err());
        assert_eq!(
            LatticeKey::from_leading(&[1, 1]).unwrap().coords(),
            &[1, 1, -2]
        );
    }

    #[test]
    fn elevated_point_checks_sum() {
        assert!(ElevatedPoint::new(vec![1.0, 1.0]).is_err());
        assert!(ElevatedPoint::new(vec![1.0]).is_err());
    }
}

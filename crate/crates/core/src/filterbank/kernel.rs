use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::lattice::{neighbor_offsets, OffsetTable};

const MAGIC: &[u8; 4] = b"PCNV";
const VERSION: u32 = 1;

/// Lattice filter weights indexed `(out channel, in channel, offset)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    d: usize,
    s: usize,
    c_out: usize,
    c_in: usize,
    taps: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(d: usize, s: usize, c_out: usize, c_in: usize, weights: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("kernel dimension must be at least 1"));
        }
        if c_out == 0 || c_in == 0 {
            return Err(Error::invalid("kernel channel counts must be positive"));
        }
        let taps = crate::lattice::neighborhood_size_checked(d, s)?;
        if weights.len() != c_out * c_in * taps {
            return Err(Error::shape(format!(
                "{} weights for a {c_out}x{c_in}x{taps} kernel",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("kernel weights must be finite"));
        }
        Ok(Self {
            d,
            s,
            c_out,
            c_in,
            taps,
            weights,
        })
    }

    pub fn zeros(d: usize, s: usize, c_out: usize, c_in: usize) -> Result<Self> {
        let taps = crate::lattice::neighborhood_size_checked(d, s)?;
        Self::new(d, s, c_out, c_in, vec![0.0; c_out * c_in * taps])
    }

    /// Weight 1 at the center offset for matching channels.
    pub fn delta(d: usize, s: usize, channels: usize) -> Result<Self> {
        let mut k = Self::zeros(d, s, channels, channels)?;
        for c in 0..channels {
            // The all-zero offset comes first in coefficient order.
            k.set(c, c, 0, 1.0);
        }
        Ok(k)
    }

    /// Repeats a single-channel kernel on the diagonal of a `channels x channels` kernel.
    pub fn diagonal(base: &Kernel, channels: usize) -> Result<Self> {
        if base.c_out != 1 || base.c_in != 1 {
            return Err(Error::shape("diagonal expansion needs a 1x1 kernel"));
        }
        let mut k = Self::zeros(base.d, base.s, channels, channels)?;
        for c in 0..channels {
            for n in 0..base.taps {
                k.set(c, c, n, base.weights[n]);
            }
        }
        Ok(k)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn neighborhood(&self) -> usize {
        self.s
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    /// Number of offsets per channel pair.
    pub fn taps(&self) -> usize {
        self.taps
    }

    #[inline]
    pub fn index(&self, co: usize, ci: usize, n: usize) -> usize {
        (co * self.c_in + ci) * self.taps + n
    }

    #[inline]
    pub fn get(&self, co: usize, ci: usize, n: usize) -> f64 {
        self.weights[self.index(co, ci, n)]
    }

    pub fn set(&mut self, co: usize, ci: usize, n: usize, w: f64) {
        let i = self.index(co, ci, n);
        self.weights[i] = w;
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn same_shape(&self, other: &Kernel) -> bool {
        (self.d, self.s, self.c_out, self.c_in) == (other.d, other.s, other.c_out, other.c_in)
    }

    /// The adjoint kernel: `w'[ci, co, n] = w[co, ci, -n]`.
    pub fn transposed(&self, offsets: &OffsetTable) -> Result<Kernel> {
        self.check_offsets(offsets)?;
        let mut t = Kernel::zeros(self.d, self.s, self.c_in, self.c_out)?;
        for co in 0..self.c_out {
            for ci in 0..self.c_in {
                for n in 0..self.taps {
                    t.set(ci, co, n, self.get(co, ci, offsets.negated(n)));
                }
            }
        }
        Ok(t)
    }

    pub(crate) fn check_offsets(&self, offsets: &OffsetTable) -> Result<()> {
        if offsets.dim() != self.d || offsets.neighborhood() != self.s {
            return Err(Error::shape(format!(
                "kernel built for d={}, s={} used with d={}, s={}",
                self.d,
                self.s,
                offsets.dim(),
                offsets.neighborhood()
            )));
        }
        Ok(())
    }

    /// Writes the `PCNV` binary format (little endian).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [
            VERSION,
            self.d as u32,
            self.s as u32,
            self.c_out as u32,
            self.c_in as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for x in &self.weights {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Kernel> {
        let bad = |reason: String| Error::Format {
            format: "PCNV",
            reason,
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|e| bad(format!("header: {e}")))?;
        if &magic != MAGIC {
            return Err(bad("bad magic".into()));
        }
        let mut word = [0u8; 4];
        let mut header = [0u32; 5];
        for h in header.iter_mut() {
            r.read_exact(&mut word)
                .map_err(|e| bad(format!("header: {e}")))?;
            *h = u32::from_le_bytes(word);
        }
        let [version, d, s, c_out, c_in] = header.map(|h| h as usize);
        if version != VERSION as usize {
            return Err(bad(format!("unsupported version {version}")));
        }
        if d == 0 || c_out == 0 || c_in == 0 {
            return Err(bad("zero dimension or channel count".into()));
        }
        let taps = crate::lattice::neighborhood_size_checked(d, s)
            .map_err(|_| bad("neighborhood too large".into()))?;
        let count = c_out
            .checked_mul(c_in)
            .and_then(|x| x.checked_mul(taps))
            .ok_or_else(|| bad("weight count overflow".into()))?;
        let mut weights = Vec::with_capacity(count.min(1 << 24));
        let mut buf = [0u8; 8];
        for i in 0..count {
            r.read_exact(&mut buf)
                .map_err(|_| bad(format!("truncated after {i} of {count} weights")))?;
            weights.push(f64::from_le_bytes(buf));
        }
        Kernel::new(d, s, c_out, c_in, weights)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut buf = Vec::with_capacity(24 + 8 * self.weights.len());
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Kernel> {
        let bytes = std::fs::read(path)?;
        Kernel::read_from(bytes.as_slice())
    }
}

/// Normalized Gaussian over lattice offsets.
///
/// `w_n ~ exp(-|o_n|^2 / (2 sigma^2 |u_0|^2))` with `|u_0|^2 = d^2 + d`, so
/// `sigma` is measured in nearest-neighbor steps. Weights sum to one.
pub fn gaussian_kernel(d: usize, s: usize, sigma: f64) -> Result<Kernel> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "gaussian sigma must be positive, got {sigma}"
        )));
    }
    let table = neighbor_offsets(d, s)?;
    let unit = (d * d + d) as f64;
    let raw: Vec<f64> = (0..table.len())
        .map(|n| (-table.norm_squared(n) / (2.0 * sigma * sigma * unit)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Kernel::new(d, s, 1, 1, raw.into_iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hexagonal_gaussian_closed_form() {
        let k = gaussian_kernel(2, 1, 1.0).unwrap();
        let center = 1.0 / (1.0 + 6.0 * (-0.5f64).exp());
        assert!((k.get(0, 0, 0) - center).abs() < 1e-15);
        assert!((center - 0.2157).abs() < 2e-4);
        for n in 1..7 {
            assert!((k.get(0, 0, n) - center * (-0.5f64).exp()).abs() < 1e-15);
            assert!((k.get(0, 0, n) - 0.1307).abs() < 1e-4);
        }
    }

    #[test]
    fn wide_gaussian_tends_to_uniform() {
        let k = gaussian_kernel(3, 2, 1e6).unwrap();
        for &w in k.weights() {
            assert!((w - 1.0 / 65.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_symmetry_and_peak() {
        let table = neighbor_offsets(3, 2).unwrap();
        let k = gaussian_kernel(3, 2, 0.7).unwrap();
        let sum: f64 = k.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let center = k.get(0, 0, table.zero_index());
        for n in 0..table.len() {
            assert!(k.get(0, 0, n) <= center);
            assert_eq!(k.get(0, 0, n), k.get(0, 0, table.negated(n)));
        }
    }

    #[test]
    fn gaussian_rejects_bad_sigma() {
        assert!(gaussian_kernel(2, 1, 0.0).is_err());
        assert!(gaussian_kernel(2, 1, -1.0).is_err());
        assert!(gaussian_kernel(2, 1, f64::NAN).is_err());
    }

    #[test]
    fn pcnv_layout() {
        let k = Kernel::new(1, 1, 1, 1, vec![0.5, -1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        k.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"PCNV");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(buf.len(), 24 + 3 * 8);
        assert_eq!(&buf[24..32], &0.5f64.to_le_bytes());
        assert_eq!(Kernel::read_from(buf.as_slice()).unwrap(), k);
    }

    #[test]
    fn pcnv_rejects_bad_input() {
        assert!(Kernel::read_from(&b"XXXX"[..]).is_err());
        let k = Kernel::delta(2, 1, 1).unwrap();
        let mut buf = Vec::new();
        k.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        let err = Kernel::read_from(buf.as_slice()).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
        let mut v2 = Vec::new();
        k.write_to(&mut v2).unwrap();
        v2[4] = 2;
        assert!(Kernel::read_from(v2.as_slice()).is_err());
    }

    #[test]
    fn shape_checks() {
        assert!(Kernel::new(2, 1, 1, 1, vec![0.0; 6]).is_err());
        assert!(Kernel::new(2, 1, 1, 1, vec![f64::NAN; 7]).is_err());
        assert!(Kernel::new(0, 1, 1, 1, vec![]).is_err());
    }
}

//! Sample sets `(f_i, v_i)` built from images.
//!
//! Pixel coordinates are `(x, y) = (column, row)` with the origin at the
//! center of the top-left pixel.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::filterbank::SignalMatrix;
use crate::rng::Rng;

use super::GrayImage;

/// Features with one signal row per feature.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub features: FeatureSet,
    pub values: SignalMatrix,
}

impl SampleSet {
    pub fn new(features: FeatureSet, values: SignalMatrix) -> Result<Self> {
        if features.len() != values.rows() {
            return Err(Error::shape(format!(
                "{} features for {} value rows",
                features.len(),
                values.rows()
            )));
        }
        Ok(Self { features, values })
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

fn build(dim: usize, coords: Vec<f64>, values: Vec<f64>) -> Result<SampleSet> {
    SampleSet::new(FeatureSet::new(dim, coords)?, SignalMatrix::column(values)?)
}

/// `(x / spatial, y / spatial, gray / intensity)` per pixel, value = gray.
pub fn bilateral_features(
    img: &GrayImage,
    spatial_scale: f64,
    intensity_scale: f64,
) -> Result<SampleSet> {
    positive("spatial scale", spatial_scale)?;
    positive("intensity scale", intensity_scale)?;
    let mut coords = Vec::with_capacity(img.len() * 3);
    for r in 0..img.height() {
        for c in 0..img.width() {
            coords.extend([
                c as f64 / spatial_scale,
                r as f64 / spatial_scale,
                img.get(r, c) / intensity_scale,
            ]);
        }
    }
    build(3, coords, img.pixels().to_vec())
}

/// `(x / spatial, y / spatial)` per pixel, value = gray.
pub fn position_features(img: &GrayImage, spatial_scale: f64) -> Result<SampleSet> {
    positive("spatial scale", spatial_scale)?;
    let mut coords = Vec::with_capacity(img.len() * 2);
    for r in 0..img.height() {
        for c in 0..img.width() {
            coords.extend([c as f64 / spatial_scale, r as f64 / spatial_scale]);
        }
    }
    build(2, coords, img.pixels().to_vec())
}

/// Bilinear interpolation at continuous `(x, y)`, clamped to the image.
pub fn bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let xm = (img.width() - 1) as f64;
    let ym = (img.height() - 1) as f64;
    let x = x.clamp(0.0, xm);
    let y = y.clamp(0.0, ym);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let tx = x - x0 as f64;
    let ty = y - y0 as f64;
    let top = img.get(y0, x0) * (1.0 - tx) + img.get(y0, x1) * tx;
    let bottom = img.get(y1, x0) * (1.0 - tx) + img.get(y1, x1) * tx;
    top * (1.0 - ty) + bottom * ty
}

/// How [`subsample`] picks positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// Uniform continuous positions over `[0, W-1] x [0, H-1]`, values by
    /// bilinear interpolation.
    Continuous,
    /// A uniform subset of pixel centers, emitted in row-major order.
    Grid,
}

/// Draws `ceil(fraction * N)` positional samples (`d = 2`) from an image.
pub fn subsample(
    img: &GrayImage,
    spatial_scale: f64,
    fraction: f64,
    seed: u64,
    sampling: Sampling,
) -> Result<SampleSet> {
    positive("spatial scale", spatial_scale)?;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    let total = img.len();
    let count = ((fraction * total as f64).ceil() as usize).clamp(1, total);
    let mut rng = Rng::new(seed);
    let mut coords = Vec::with_capacity(count * 2);
    let mut values = Vec::with_capacity(count);
    match sampling {
        Sampling::Continuous => {
            let xm = (img.width() - 1) as f64;
            let ym = (img.height() - 1) as f64;
            for _ in 0..count {
                let x = rng.uniform() * xm;
                let y = rng.uniform() * ym;
                coords.extend([x / spatial_scale, y / spatial_scale]);
                values.push(bilinear(img, x, y));
            }
        }
        Sampling::Grid => {
            let mut idx: Vec<usize> = (0..total).collect();
            // Partial Fisher-Yates: the first `count` slots are the draw.
            for i in 0..count {
                let j = i + rng.below(total - i);
                idx.swap(i, j);
            }
            let mut chosen = idx[..count].to_vec();
            chosen.sort_unstable();
            for p in chosen {
                let (r, c) = (p / img.width(), p % img.width());
                coords.extend([c as f64 / spatial_scale, r as f64 / spatial_scale]);
                values.push(img.get(r, c));
            }
        }
    }
    build(2, coords, values)
}

/// Stacks `n_angles` rotated copies of the pixel grid in `(x, y, angle)` space.
///
/// Copy `t` rotates every pixel position by `2 pi t / n_angles` about the
/// image center; features are `(x' / spatial, y' / spatial, theta / angle_scale)`
/// and values the unrotated pixel values.
pub fn rotation_stack(
    img: &GrayImage,
    n_angles: usize,
    spatial_scale: f64,
    angle_scale: f64,
) -> Result<SampleSet> {
    if n_angles == 0 {
        return Err(Error::invalid("need at least one angle"));
    }
    positive("spatial scale", spatial_scale)?;
    positive("angle scale", angle_scale)?;
    let cx = (img.width() as f64 - 1.0) / 2.0;
    let cy = (img.height() as f64 - 1.0) / 2.0;
    let mut coords = Vec::with_capacity(img.len() * n_angles * 3);
    let mut values = Vec::with_capacity(img.len() * n_angles);
    for t in 0..n_angles {
        let theta = 2.0 * PI * t as f64 / n_angles as f64;
        let (sin, cos) = theta.sin_cos();
        for r in 0..img.height() {
            for c in 0..img.width() {
                let dx = c as f64 - cx;
                let dy = r as f64 - cy;
                let x = cx + cos * dx - sin * dy;
                let y = cy + sin * dx + cos * dy;
                coords.extend([x / spatial_scale, y / spatial_scale, theta / angle_scale]);
                values.push(img.get(r, c));
            }
        }
    }
    build(3, coords, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> GrayImage {
        GrayImage::new(2, 2, vec![0.1, 0.2, 0.3, 0.6]).unwrap()
    }

    #[test]
    fn single_pixel_bilateral() {
        let img = GrayImage::filled(1, 1, 0.4);
        let s = bilateral_features(&img, 5.0, 0.2).unwrap();
        assert_eq!(s.features.row(0), &[0.0, 0.0, 2.0]);
        assert_eq!(s.values.get(0, 0), 0.4);
    }

    #[test]
    fn bilateral_fixture() {
        let s = bilateral_features(&fixture(), 2.0, 0.1).unwrap();
        let want = [
            [0.0, 0.0, 1.0],
            [0.5, 0.0, 2.0],
            [0.0, 0.5, 3.0],
            [0.5, 0.5, 6.0],
        ];
        for (i, w) in want.iter().enumerate() {
            for (a, b) in s.features.row(i).iter().zip(w) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let doubled = bilateral_features(&fixture(), 4.0, 0.2).unwrap();
        for (a, b) in doubled
            .features
            .as_slice()
            .iter()
            .zip(s.features.as_slice())
        {
            assert!((a - b / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn position_fixture() {
        let s = position_features(&fixture(), 0.5).unwrap();
        assert_eq!(
            s.features.as_slice(),
            &[0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0]
        );
        assert_eq!(s.values.as_slice(), fixture().pixels());
        assert!(position_features(&fixture(), 0.0).is_err());
    }

    #[test]
    fn bilinear_center_is_mean() {
        let v = bilinear(&fixture(), 0.5, 0.5);
        assert!((v - 0.3).abs() < 1e-15);
        assert_eq!(bilinear(&fixture(), 1.0, 0.0), 0.2);
    }

    #[test]
    fn subsample_counts_and_grid() {
        let img = GrayImage::new(3, 4, (0..12).map(|i| i as f64 / 12.0).collect()).unwrap();
        let all = subsample(&img, 1.0, 1.0, 3, Sampling::Continuous).unwrap();
        assert_eq!(all.len(), 12);
        let part = subsample(&img, 1.0, 0.25, 3, Sampling::Continuous).unwrap();
        assert_eq!(part.len(), 3);
        let grid = subsample(&img, 2.0, 1.0, 3, Sampling::Grid).unwrap();
        assert_eq!(grid, position_features(&img, 2.0).unwrap());
        assert!(subsample(&img, 1.0, 0.0, 3, Sampling::Grid).is_err());
        assert!(subsample(&img, 1.0, 1.5, 3, Sampling::Grid).is_err());
    }

    #[test]
    fn continuous_samples_interpolate() {
        let img = GrayImage::new(3, 4, (0..12).map(|i| (i * i) as f64 / 144.0).collect()).unwrap();
        let s = subsample(&img, 0.5, 0.5, 8, Sampling::Continuous).unwrap();
        for i in 0..s.len() {
            let f = s.features.row(i);
            let want = bilinear(&img, f[0] * 0.5, f[1] * 0.5);
            assert!((s.values.get(i, 0) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn single_angle_stack_matches_positions() {
        let img = fixture();
        let stack = rotation_stack(&img, 1, 2.0, 1.0).unwrap();
        let pos = position_features(&img, 2.0).unwrap();
        for i in 0..img.len() {
            assert_eq!(&stack.features.row(i)[..2], pos.features.row(i));
            assert_eq!(stack.features.row(i)[2], 0.0);
        }
    }

    #[test]
    fn half_turn_fixes_center_pixel() {
        let img = GrayImage::filled(3, 3, 0.5);
        let stack = rotation_stack(&img, 2, 1.0, 1.0).unwrap();
        let center = stack.features.row(9 + 4);
        assert!((center[0] - 1.0).abs() < 1e-12 && (center[1] - 1.0).abs() < 1e-12);
        assert!((center[2] - PI).abs() < 1e-12);
    }

    #[test]
    fn quarter_turns_of_fixture() {
        // Center (0.5, 0.5); pixel offsets (+-0.5, +-0.5) rotate by 90 degrees.
        let stack = rotation_stack(&fixture(), 4, 1.0, 1.0).unwrap();
        assert_eq!(stack.len(), 16);
        let base = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        for t in 0..4 {
            let theta = PI / 2.0 * t as f64;
            for (p, &(x, y)) in base.iter().enumerate() {
                let (dx, dy) = (x - 0.5, y - 0.5);
                let (mut rx, mut ry) = (dx, dy);
                for _ in 0..t {
                    (rx, ry) = (-ry, rx);
                }
                let f = stack.features.row(t * 4 + p);
                assert!((f[0] - (0.5 + rx)).abs() < 1e-12, "t={t} p={p} {f:?}");
                assert!((f[1] - (0.5 + ry)).abs() < 1e-12);
                assert!((f[2] - theta).abs() < 1e-12);
                assert_eq!(stack.values.get(t * 4 + p, 0), fixture().pixels()[p]);
            }
        }
    }
}

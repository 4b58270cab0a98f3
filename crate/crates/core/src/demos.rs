//! Resampling and rotation experiments with the Gaussian permutohedral filter.

use crate::error::Result;
use crate::features::FeatureSet;
use crate::filterbank::{gaussian_kernel, PermutohedralFrame};
use crate::imaging::{
    position_features, psnr_from_mse, rotation_stack, subsample, GrayImage, Sampling,
};
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    pub spatial_scale: f64,
    pub neighborhood: usize,
    pub kernel_sigma: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            spatial_scale: 1.0,
            neighborhood: 1,
            kernel_sigma: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResampleReport {
    /// Filtered reconstruction on the full pixel grid.
    pub reconstruction: GrayImage,
    /// PSNR over the evaluation pixels only.
    pub psnr: f64,
    pub train_samples: usize,
    pub test_samples: usize,
}

/// Splats `train_fraction` of the image (continuous bilinear samples or a
/// subset of pixel centers) and reconstructs by normalized Gaussian filtering
/// at a `test_fraction` subset of pixel centers, and at the full grid for the
/// returned image.
pub fn resample(
    img: &GrayImage,
    train_fraction: f64,
    test_fraction: f64,
    seed: u64,
    sampling: Sampling,
    params: FilterParams,
) -> Result<ResampleReport> {
    let train = subsample(
        img,
        params.spatial_scale,
        train_fraction,
        derive_seed(seed, 0),
        sampling,
    )?;
    let test = subsample(
        img,
        params.spatial_scale,
        test_fraction,
        derive_seed(seed, 1),
        Sampling::Grid,
    )?;
    let grid = position_features(img, params.spatial_scale)?;
    let kernel = gaussian_kernel(2, params.neighborhood, params.kernel_sigma)?;

    let frame = PermutohedralFrame::build(&train.features, &test.features, params.neighborhood)?;
    let at_test = frame.filter_normalized(&train.values, &kernel)?;
    let mse = at_test
        .as_slice()
        .iter()
        .zip(test.values.as_slice())
        .map(|(a, b)| (a.clamp(0.0, 1.0) - b).powi(2))
        .sum::<f64>()
        / test.len() as f64;

    let frame = PermutohedralFrame::build(&train.features, &grid.features, params.neighborhood)?;
    let full = frame.filter_normalized(&train.values, &kernel)?;
    let reconstruction = GrayImage::from_signal(img.height(), img.width(), &full)?.clamped();
    Ok(ResampleReport {
        reconstruction,
        psnr: psnr_from_mse(mse),
        train_samples: train.len(),
        test_samples: test.len(),
    })
}

/// Filters the `n_angles` rotated copies of the image jointly in
/// `(x, y, angle)` and reads the result back on the unrotated grid (angle 0).
pub fn rotation_filter(
    img: &GrayImage,
    n_angles: usize,
    angle_scale: f64,
    params: FilterParams,
) -> Result<GrayImage> {
    let stack = rotation_stack(img, n_angles, params.spatial_scale, angle_scale)?;
    let grid = position_features(img, params.spatial_scale)?;
    let at_zero: Vec<f64> = grid
        .features
        .iter()
        .flat_map(|f| [f[0], f[1], 0.0])
        .collect();
    let out_features = FeatureSet::new(3, at_zero)?;
    let frame = PermutohedralFrame::build(&stack.features, &out_features, params.neighborhood)?;
    let kernel = gaussian_kernel(3, params.neighborhood, params.kernel_sigma)?;
    let out = frame.filter_normalized(&stack.values, &kernel)?;
    Ok(GrayImage::from_signal(img.height(), img.width(), &out)?.clamped())
}

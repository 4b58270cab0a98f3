//! Grayscale images, netpbm I/O, noise, PSNR and feature construction.

mod features;
mod noise;
mod pnm;

pub use features::{
    bilateral_features, bilinear, position_features, rotation_stack, subsample, SampleSet, Sampling,
};
pub use noise::{add_gaussian_noise, add_gaussian_noise_unclamped};
pub use pnm::{decode_pnm, encode_pgm, load_image, save_image};

use crate::error::{Error, Result};
use crate::filterbank::SignalMatrix;

/// Row-major `height x width` grayscale image with nominal range `[0, 1]`.
///
/// Pixels are always finite. Operations that clamp say so; unclamped
/// noisy observations may leave the nominal range.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::shape(format!(
                "{} pixels for a {height}x{width} image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("image contains non-finite pixels"));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            pixels: vec![value; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.pixels[row * self.width + col] = v;
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    /// Copy with every pixel clamped to `[0, 1]`.
    pub fn clamped(&self) -> GrayImage {
        Self {
            height: self.height,
            width: self.width,
            pixels: self.pixels.iter().map(|p| p.clamp(0.0, 1.0)).collect(),
        }
    }

    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<GrayImage> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::invalid("crop exceeds image bounds"));
        }
        let mut pixels = Vec::with_capacity(height * width);
        for r in top..top + height {
            pixels.extend_from_slice(
                &self.pixels[r * self.width + left..r * self.width + left + width],
            );
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len().max(1) as f64
    }

    /// Pixels as an `(H W) x 1` signal.
    pub fn to_signal(&self) -> SignalMatrix {
        SignalMatrix::column(self.pixels.clone()).expect("image pixels are finite")
    }

    pub fn from_signal(height: usize, width: usize, signal: &SignalMatrix) -> Result<Self> {
        if signal.cols() != 1 {
            return Err(Error::shape("image signal must have one channel"));
        }
        Self::new(height, width, signal.as_slice().to_vec())
    }
}

/// `10 log10(1 / MSE)` for unit peak; `+inf` for identical images.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.height != b.height || a.width != b.width {
        return Err(Error::shape(format!(
            "{}x{} vs {}x{}",
            a.height, a.width, b.height, b.width
        )));
    }
    let mse = mse(&a.pixels, &b.pixels);
    Ok(psnr_from_mse(mse))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_identical_is_infinite() {
        let a = GrayImage::filled(4, 4, 0.3);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_uniform_offset() {
        let a = GrayImage::filled(3, 5, 0.2);
        let b = GrayImage::filled(3, 5, 0.3);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn psnr_at_noise_level() {
        let sigma: f64 = 25.0 / 255.0;
        let p = psnr_from_mse(sigma * sigma);
        assert!((p - 20.17).abs() < 0.005, "{p}");
    }

    #[test]
    fn psnr_symmetric_and_checks_shape() {
        let a = GrayImage::new(1, 3, vec![0.1, 0.5, 0.9]).unwrap();
        let b = GrayImage::new(1, 3, vec![0.2, 0.4, 1.0]).unwrap();
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        assert!(psnr(&a, &GrayImage::filled(3, 1, 0.0)).is_err());
    }

    #[test]
    fn crop_and_clamp() {
        let img = GrayImage::new(2, 3, vec![0.0, -1.0, 0.5, 2.0, 0.25, 1.0]).unwrap();
        let c = img.crop(1, 1, 1, 2).unwrap();
        assert_eq!(c.pixels(), &[0.25, 1.0]);
        assert_eq!(img.clamped().pixels(), &[0.0, 0.0, 0.5, 1.0, 0.25, 1.0]);
        assert!(img.crop(1, 2, 1, 2).is_err());
    }
}

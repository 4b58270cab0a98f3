use crate::rng::Rng;

use super::GrayImage;

/// Adds `N(0, sigma^2)` noise in row-major order and clamps to `[0, 1]`.
pub fn add_gaussian_noise(img: &GrayImage, sigma: f64, seed: u64) -> GrayImage {
    add_gaussian_noise_unclamped(img, sigma, seed).clamped()
}

/// Same noise stream as [`add_gaussian_noise`], without clamping.
pub fn add_gaussian_noise_unclamped(img: &GrayImage, sigma: f64, seed: u64) -> GrayImage {
    assert!(sigma >= 0.0, "noise sigma must be non-negative");
    let mut out = img.clone();
    if sigma == 0.0 {
        return out;
    }
    let mut rng = Rng::new(seed);
    for p in out.pixels_mut() {
        *p += sigma * rng.gaussian();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_identity() {
        let img = GrayImage::new(1, 3, vec![0.0, 0.4, 1.0]).unwrap();
        assert_eq!(add_gaussian_noise(&img, 0.0, 9), img);
    }

    #[test]
    fn noise_level_statistics() {
        let sigma = 25.0 / 255.0;
        let img = GrayImage::filled(256, 256, 0.5);
        let noisy = add_gaussian_noise(&img, sigma, 1234);
        let diffs: Vec<f64> = noisy.pixels().iter().map(|p| p - 0.5).collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd / sigma - 1.0).abs() < 0.03, "sd {sd}");
    }

    #[test]
    fn reproducible_and_clamped() {
        let img = GrayImage::filled(16, 16, 0.95);
        let a = add_gaussian_noise(&img, 0.2, 5);
        let b = add_gaussian_noise(&img, 0.2, 5);
        assert_eq!(a, b);
        assert!(a.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
        let raw = add_gaussian_noise_unclamped(&img, 0.2, 5);
        assert!(raw.pixels().iter().any(|&p| p > 1.0));
        assert_eq!(raw.clamped(), a);
    }
}

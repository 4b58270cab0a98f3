//! Image denoisers built from the layers in [`crate::autodiff`]: a spatial
//! CNN baseline, Gaussian and trained permutohedral filters, and their sum.

mod checkpoint;
mod model;
mod train;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use checkpoint::{kernel_path, load_checkpoint, save_checkpoint, state_path, Checkpoint};
pub use model::Denoiser;
pub use model::Optimizers;
pub use train::{
    cross_validate_scales, evaluate, noisy_input_psnr, observe, EpochRecord, NamedImage,
    ScaleScore, Trainer,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Cnn,
    PcnnGauss,
    PcnnTrained,
    CnnPlusPcnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Cnn,
        ModelKind::PcnnGauss,
        ModelKind::PcnnTrained,
        ModelKind::CnnPlusPcnn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Cnn => "cnn",
            ModelKind::PcnnGauss => "pcnn-gauss",
            ModelKind::PcnnTrained => "pcnn-trained",
            ModelKind::CnnPlusPcnn => "cnn+pcnn",
        }
    }

    pub fn has_cnn(self) -> bool {
        matches!(self, ModelKind::Cnn | ModelKind::CnnPlusPcnn)
    }

    pub fn has_pcnn(self) -> bool {
        !matches!(self, ModelKind::Cnn)
    }

    /// Whether training updates any weights.
    pub fn is_trainable(self) -> bool {
        !matches!(self, ModelKind::PcnnGauss)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model kind {s:?}")))
    }
}

/// Everything that determines a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct DenoiseConfig {
    pub model: ModelKind,
    pub seed: u64,
    /// Standard deviation of the additive noise, in `[0, 1]` intensity units.
    pub noise_sigma: f64,
    /// Clamp noisy observations to `[0, 1]`.
    pub clamp_noise: bool,
    pub spatial_scale: f64,
    pub intensity_scale: f64,
    pub neighborhood: usize,
    /// Width of the Gaussian kernel in lattice steps.
    pub kernel_sigma: f64,
    pub conv_size: usize,
    pub epochs: usize,
    pub crop: usize,
    /// Learning rate of the permutohedral kernel.
    pub lr: f64,
    /// Learning rate of the spatial convolution.
    pub lr_cnn: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::PcnnTrained,
            seed: 1,
            noise_sigma: 25.0 / 255.0,
            clamp_noise: false,
            spatial_scale: 6.0,
            intensity_scale: 0.1,
            neighborhood: 2,
            kernel_sigma: 1.0,
            conv_size: 5,
            epochs: 10,
            crop: 128,
            lr: 0.1,
            lr_cnn: 1e-3,
            momentum: 0.9,
            weight_decay: 5e-4,
        }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("spatial scale", self.spatial_scale),
            ("intensity scale", self.intensity_scale),
            ("kernel sigma", self.kernel_sigma),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("noise sigma", self.noise_sigma),
            ("learning rate", self.lr),
            ("cnn learning rate", self.lr_cnn),
            ("momentum", self.momentum),
            ("weight decay", self.weight_decay),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if self.conv_size.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "conv size must be odd, got {}",
                self.conv_size
            )));
        }
        if self.crop == 0 {
            return Err(Error::invalid("crop must be positive"));
        }
        Ok(())
    }
}

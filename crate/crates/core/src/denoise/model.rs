use std::sync::Arc;

use crate::autodiff::{euclidean_loss, Conv2DLayer, Normalization, PConvLayer, Sgd};
use crate::error::{Error, Result};
use crate::filterbank::{gaussian_kernel, Kernel, PermutohedralFrame, SignalMatrix};
use crate::imaging::{bilateral_features, GrayImage};
use crate::rng::derive_seed;

use super::{DenoiseConfig, ModelKind};

pub(crate) const STREAM_CONV_INIT: u64 = 5;

/// Bilateral features are `(x, y, intensity)`.
const FEATURE_DIM: usize = 3;

/// A denoiser: optional spatial convolution plus optional permutohedral filter,
/// summed.
///
/// The permutohedral branch divides by its own density, so with the initial
/// Gaussian weights it is exactly the bilateral filter and after training it
/// is still a weighted average of the noisy pixels.
#[derive(Clone, Debug)]
pub struct Denoiser {
    kind: ModelKind,
    spatial_scale: f64,
    intensity_scale: f64,
    kernel: Option<Kernel>,
    conv: Option<Conv2DLayer>,
}

/// Per-branch optimizers.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimizers {
    pub pcnn: Option<Sgd>,
    pub cnn: Option<Sgd>,
}

impl Denoiser {
    /// Freshly initialized model: Gaussian permutohedral weights, uniform
    /// fan-in CNN weights, and a zero CNN branch when both are summed.
    pub fn new(config: &DenoiseConfig) -> Result<Self> {
        config.validate()?;
        let kernel = match config.model.has_pcnn() {
            true => Some(gaussian_kernel(
                FEATURE_DIM,
                config.neighborhood,
                config.kernel_sigma,
            )?),
            false => None,
        };
        let conv = match config.model {
            ModelKind::Cnn => Some(Conv2DLayer::uniform_init(
                config.conv_size,
                1,
                1,
                derive_seed(config.seed, STREAM_CONV_INIT),
            )?),
            ModelKind::CnnPlusPcnn => Some(Conv2DLayer::zeros(config.conv_size, 1, 1)?),
            _ => None,
        };
        Self::with_weights(config, kernel, conv)
    }

    /// Model with given weights; branch presence must match `config.model`.
    pub fn with_weights(
        config: &DenoiseConfig,
        kernel: Option<Kernel>,
        conv: Option<Conv2DLayer>,
    ) -> Result<Self> {
        config.validate()?;
        let kind = config.model;
        if kernel.is_some() != kind.has_pcnn() || conv.is_some() != kind.has_cnn() {
            return Err(Error::invalid(format!(
                "weights do not match model kind {kind}"
            )));
        }
        if let Some(k) = &kernel {
            if k.dim() != FEATURE_DIM || k.c_in() != 1 || k.c_out() != 1 {
                return Err(Error::invalid(format!(
                    "denoising kernel must be d={FEATURE_DIM}, 1x1, got d={} {}x{}",
                    k.dim(),
                    k.c_out(),
                    k.c_in()
                )));
            }
        }
        if let Some(c) = &conv {
            if c.c_in() != 1 || c.c_out() != 1 {
                return Err(Error::invalid(
                    "denoising convolution must be single-channel",
                ));
            }
        }
        Ok(Self {
            kind,
            spatial_scale: config.spatial_scale,
            intensity_scale: config.intensity_scale,
            kernel,
            conv,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        self.kernel.as_ref()
    }

    pub fn conv(&self) -> Option<&Conv2DLayer> {
        self.conv.as_ref()
    }

    pub fn optimizers(&self, config: &DenoiseConfig) -> Optimizers {
        let trainable = self.kind.is_trainable();
        Optimizers {
            pcnn: self.kernel.as_ref().filter(|_| trainable).map(|k| {
                Sgd::new(
                    config.lr,
                    config.momentum,
                    config.weight_decay,
                    k.weights().len(),
                )
            }),
            cnn: self.conv.as_ref().map(|c| {
                Sgd::new(
                    config.lr_cnn,
                    config.momentum,
                    config.weight_decay,
                    c.weights().len(),
                )
            }),
        }
    }

    fn pconv_layer(&self, noisy: &GrayImage) -> Result<Option<PConvLayer>> {
        let Some(kernel) = &self.kernel else {
            return Ok(None);
        };
        let samples = bilateral_features(noisy, self.spatial_scale, self.intensity_scale)?;
        let frame =
            PermutohedralFrame::build(&samples.features, &samples.features, kernel.neighborhood())?;
        let layer = PConvLayer::new(Arc::new(frame), kernel.clone())?;
        Ok(Some(layer.with_normalization(Normalization::Density)?))
    }

    fn forward(
        &self,
        noisy: &GrayImage,
        conv: Option<&mut Conv2DLayer>,
    ) -> Result<(SignalMatrix, Option<PConvLayer>)> {
        let input = noisy.to_signal();
        let mut out = SignalMatrix::zeros(input.rows(), 1);
        let mut layer = self.pconv_layer(noisy)?;
        if let Some(layer) = layer.as_mut() {
            out = out.add(&layer.forward(&input)?)?;
        }
        if let Some(conv) = conv {
            out = out.add(&conv.forward(&input, noisy.height(), noisy.width())?)?;
        }
        Ok((out, layer))
    }

    /// Denoised estimate, clamped to `[0, 1]`.
    pub fn predict(&self, noisy: &GrayImage) -> Result<GrayImage> {
        let mut conv = self.conv.clone();
        let (out, _) = self.forward(noisy, conv.as_mut())?;
        if !out.is_finite() {
            return Err(Error::NonFinite("prediction".into()));
        }
        Ok(GrayImage::from_signal(noisy.height(), noisy.width(), &out)?.clamped())
    }

    /// One SGD step on a single (noisy, clean) pair; returns the loss before
    /// the update.
    pub fn train_step(
        &mut self,
        noisy: &GrayImage,
        clean: &GrayImage,
        opt: &mut Optimizers,
    ) -> Result<f64> {
        if (noisy.height(), noisy.width()) != (clean.height(), clean.width()) {
            return Err(Error::shape("noisy and clean images differ in size"));
        }
        let mut conv = self.conv.take();
        let result = self.forward(noisy, conv.as_mut());
        let (out, layer) = match result {
            Ok(r) => r,
            Err(e) => {
                self.conv = conv;
                return Err(e);
            }
        };
        let (loss, grad) = euclidean_loss(&out, &clean.to_signal())?;
        if !loss.is_finite() {
            self.conv = conv;
            return Err(Error::NonFinite(format!("training loss {loss}")));
        }
        if let (Some(layer), Some(sgd), Some(kernel)) =
            (&layer, opt.pcnn.as_mut(), self.kernel.as_mut())
        {
            let (_, grad_k) = layer.backward(&grad)?;
            sgd.step(kernel.weights_mut(), grad_k.weights())?;
        }
        if let (Some(c), Some(sgd)) = (conv.as_mut(), opt.cnn.as_mut()) {
            let (_, grad_w) = c.backward(&grad)?;
            sgd.step(c.weights_mut(), &grad_w)?;
        }
        self.conv = conv;
        Ok(loss)
    }
}

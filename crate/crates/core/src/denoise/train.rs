use std::fmt;

use crate::error::{Error, Result};
use crate::imaging::{add_gaussian_noise, add_gaussian_noise_unclamped, psnr, GrayImage};
use crate::rng::{derive_seed, Rng};

use super::model::{Denoiser, Optimizers};
use super::{Checkpoint, DenoiseConfig, ModelKind};

const STREAM_TRAIN_NOISE: u64 = 1;
const STREAM_ORDER: u64 = 2;
const STREAM_CROP: u64 = 3;
const STREAM_EVAL_NOISE: u64 = 4;

pub type NamedImage = (String, GrayImage);

fn noisy(img: &GrayImage, sigma: f64, clamp: bool, seed: u64) -> GrayImage {
    match clamp {
        true => add_gaussian_noise(img, sigma, seed),
        false => add_gaussian_noise_unclamped(img, sigma, seed),
    }
}

/// Noise seed of the `index`-th evaluation image; shared by every model so
/// comparisons are paired.
fn eval_seed(seed: u64, index: usize) -> u64 {
    derive_seed(derive_seed(seed, STREAM_EVAL_NOISE), index as u64)
}

/// The noisy observations used for evaluation: image `i` gets noise seeded
/// from `(seed, i)`, so every model sees the same inputs.
pub fn observe(images: &[NamedImage], sigma: f64, clamp: bool, seed: u64) -> Vec<GrayImage> {
    images
        .iter()
        .enumerate()
        .map(|(i, (_, img))| noisy(img, sigma, clamp, eval_seed(seed, i)))
        .collect()
}

/// PSNR of the noisy observations themselves.
pub fn noisy_input_psnr(
    images: &[NamedImage],
    sigma: f64,
    clamp: bool,
    seed: u64,
) -> Result<Vec<(String, f64)>> {
    let observed = observe(images, sigma, clamp, seed);
    images
        .iter()
        .zip(&observed)
        .map(|((name, img), obs)| Ok((name.clone(), psnr(obs, img)?)))
        .collect()
}

/// Per-image PSNR of the denoised estimate against the clean image.
pub fn evaluate(
    model: &Denoiser,
    images: &[NamedImage],
    sigma: f64,
    clamp: bool,
    seed: u64,
) -> Result<Vec<(String, f64)>> {
    let observed = observe(images, sigma, clamp, seed);
    images
        .iter()
        .zip(&observed)
        .map(|((name, img), obs)| Ok((name.clone(), psnr(&model.predict(obs)?, img)?)))
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleScore {
    pub spatial: f64,
    pub intensity: f64,
    pub psnr: f64,
}

/// Mean validation PSNR of the Gaussian filter over a grid of feature scales.
pub fn cross_validate_scales(
    val: &[NamedImage],
    config: &DenoiseConfig,
    spatial: &[f64],
    intensity: &[f64],
) -> Result<Vec<ScaleScore>> {
    let mut scores = Vec::with_capacity(spatial.len() * intensity.len());
    for &sp in spatial {
        for &it in intensity {
            let cfg = DenoiseConfig {
                model: ModelKind::PcnnGauss,
                spatial_scale: sp,
                intensity_scale: it,
                ..config.clone()
            };
            let model = Denoiser::new(&cfg)?;
            let results = evaluate(&model, val, cfg.noise_sigma, cfg.clamp_noise, cfg.seed)?;
            scores.push(ScaleScore {
                spatial: sp,
                intensity: it,
                psnr: mean(results.iter().map(|r| r.1)),
            });
        }
    }
    Ok(scores)
}

impl ScaleScore {
    /// Highest score; the earliest wins ties.
    pub fn best(scores: &[ScaleScore]) -> Option<ScaleScore> {
        scores.iter().copied().fold(None, |best, s| match best {
            Some(b) if b.psnr >= s.psnr => Some(b),
            _ => Some(s),
        })
    }
}

/// One line of the training log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_psnr: f64,
}

impl fmt::Display for EpochRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:.9e} {:.6}",
            self.epoch, self.train_loss, self.val_psnr
        )
    }
}

/// Per-image SGD over random crops with fresh noise at every step.
///
/// The image order is reshuffled every epoch. Crop positions, order and noise
/// all derive from the configured seed, so runs are reproducible.
#[derive(Clone, Debug)]
pub struct Trainer {
    config: DenoiseConfig,
    model: Denoiser,
    opt: Optimizers,
    epochs_done: usize,
    steps: u64,
}

impl Trainer {
    pub fn new(config: DenoiseConfig) -> Result<Self> {
        let model = Denoiser::new(&config)?;
        let opt = model.optimizers(&config);
        Ok(Self {
            config,
            model,
            opt,
            epochs_done: 0,
            steps: 0,
        })
    }

    pub fn from_checkpoint(cp: Checkpoint) -> Result<Self> {
        Ok(Self {
            config: cp.config,
            model: cp.model,
            opt: cp.optimizers,
            epochs_done: cp.epochs_done,
            steps: cp.steps,
        })
    }

    pub fn config(&self) -> &DenoiseConfig {
        &self.config
    }

    pub fn model(&self) -> &Denoiser {
        &self.model
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            model: self.model.clone(),
            optimizers: self.opt.clone(),
            epochs_done: self.epochs_done,
            steps: self.steps,
        }
    }

    fn crop(&self, img: &GrayImage) -> Result<GrayImage> {
        let h = self.config.crop.min(img.height());
        let w = self.config.crop.min(img.width());
        let mut rng = Rng::new(derive_seed(
            derive_seed(self.config.seed, STREAM_CROP),
            self.steps,
        ));
        let top = rng.below(img.height() - h + 1);
        let left = rng.below(img.width() - w + 1);
        img.crop(top, left, h, w)
    }

    /// Runs one epoch and returns its log record; validation PSNR is NaN when
    /// `val` is empty.
    pub fn run_epoch(&mut self, train: &[GrayImage], val: &[NamedImage]) -> Result<EpochRecord> {
        if train.is_empty() {
            return Err(Error::invalid("training set is empty"));
        }
        let mut order: Vec<usize> = (0..train.len()).collect();
        let epoch = self.epochs_done as u64;
        Rng::new(derive_seed(
            derive_seed(self.config.seed, STREAM_ORDER),
            epoch,
        ))
        .shuffle(&mut order);
        let mut total = 0.0;
        for &i in &order {
            let clean = self.crop(&train[i])?;
            let seed = derive_seed(
                derive_seed(self.config.seed, STREAM_TRAIN_NOISE),
                self.steps,
            );
            let obs = noisy(
                &clean,
                self.config.noise_sigma,
                self.config.clamp_noise,
                seed,
            );
            total += self.model.train_step(&obs, &clean, &mut self.opt)?;
            self.steps += 1;
        }
        self.epochs_done += 1;
        let val_psnr = match val.is_empty() {
            true => f64::NAN,
            false => {
                let r = evaluate(
                    &self.model,
                    val,
                    self.config.noise_sigma,
                    self.config.clamp_noise,
                    self.config.seed,
                )?;
                mean(r.iter().map(|x| x.1))
            }
        };
        Ok(EpochRecord {
            epoch: self.epochs_done,
            train_loss: total / train.len() as f64,
            val_psnr,
        })
    }

    /// Trains until `config.epochs` epochs are done, reporting each epoch.
    pub fn fit(
        &mut self,
        train: &[GrayImage],
        val: &[NamedImage],
        mut on_epoch: impl FnMut(&EpochRecord),
    ) -> Result<Vec<EpochRecord>> {
        let mut records = Vec::new();
        while self.epochs_done < self.config.epochs {
            let r = self.run_epoch(train, val)?;
            on_epoch(&r);
            records.push(r);
        }
        Ok(records)
    }
}

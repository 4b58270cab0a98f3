//! Training checkpoints: `<stem>.pcnv` holds the permutohedral kernel and
//! `<stem>.state` is a text file of `name value...` lines with the
//! configuration, progress counters, CNN weights and optimizer velocities.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::autodiff::{Conv2DLayer, Sgd};
use crate::error::{Error, Result};
use crate::filterbank::Kernel;

use super::model::{Denoiser, Optimizers};
use super::DenoiseConfig;

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config: DenoiseConfig,
    pub model: Denoiser,
    pub optimizers: Optimizers,
    pub epochs_done: usize,
    pub steps: u64,
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn kernel_path(stem: &Path) -> PathBuf {
    with_suffix(stem, ".pcnv")
}

pub fn state_path(stem: &Path) -> PathBuf {
    with_suffix(stem, ".state")
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn render_state(cp: &Checkpoint) -> String {
    let c = &cp.config;
    let mut out = String::new();
    let mut line = |name: &str, value: String| {
        let _ = writeln!(out, "{name} {value}");
    };
    line("model", c.model.to_string());
    line("seed", c.seed.to_string());
    line("noise_sigma", c.noise_sigma.to_string());
    line("clamp_noise", c.clamp_noise.to_string());
    line("spatial_scale", c.spatial_scale.to_string());
    line("intensity_scale", c.intensity_scale.to_string());
    line("neighborhood", c.neighborhood.to_string());
    line("kernel_sigma", c.kernel_sigma.to_string());
    line("conv_size", c.conv_size.to_string());
    line("epochs", c.epochs.to_string());
    line("crop", c.crop.to_string());
    line("lr", c.lr.to_string());
    line("lr_cnn", c.lr_cnn.to_string());
    line("momentum", c.momentum.to_string());
    line("weight_decay", c.weight_decay.to_string());
    line("epochs_done", cp.epochs_done.to_string());
    line("steps", cp.steps.to_string());
    if let Some(sgd) = &cp.optimizers.pcnn {
        line("pcnn_velocity", join(sgd.velocity()));
    }
    if let Some(conv) = cp.model.conv() {
        line("conv_weights", join(conv.weights()));
    }
    if let Some(sgd) = &cp.optimizers.cnn {
        line("cnn_velocity", join(sgd.velocity()));
    }
    out
}

pub fn save_checkpoint(stem: impl AsRef<Path>, cp: &Checkpoint) -> Result<()> {
    let stem = stem.as_ref();
    if let Some(kernel) = cp.model.kernel() {
        kernel.save(kernel_path(stem))?;
    }
    std::fs::write(state_path(stem), render_state(cp))?;
    Ok(())
}

fn bad(reason: impl Into<String>) -> Error {
    Error::Format {
        format: "checkpoint state",
        reason: reason.into(),
    }
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            if map
                .insert(name.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(bad(format!("line {}: duplicate field {name}", n + 1)));
            }
        }
        Ok(Self(map))
    }

    fn take(&mut self, name: &str) -> Option<String> {
        self.0.remove(name)
    }

    fn required<T: FromStr>(&mut self, name: &str) -> Result<T> {
        let raw = self
            .take(name)
            .ok_or_else(|| bad(format!("missing field {name}")))?;
        raw.parse()
            .map_err(|_| bad(format!("bad value for {name}: {raw:?}")))
    }

    fn vector(&mut self, name: &str) -> Result<Option<Vec<f64>>> {
        let Some(raw) = self.take(name) else {
            return Ok(None);
        };
        raw.split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| bad(format!("bad number in {name}: {t:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

pub fn load_checkpoint(stem: impl AsRef<Path>) -> Result<Checkpoint> {
    let stem = stem.as_ref();
    let text = std::fs::read_to_string(state_path(stem))?;
    let mut f = Fields::parse(&text)?;
    let config = DenoiseConfig {
        model: f.required::<String>("model")?.parse()?,
        seed: f.required("seed")?,
        noise_sigma: f.required("noise_sigma")?,
        clamp_noise: f.required("clamp_noise")?,
        spatial_scale: f.required("spatial_scale")?,
        intensity_scale: f.required("intensity_scale")?,
        neighborhood: f.required("neighborhood")?,
        kernel_sigma: f.required("kernel_sigma")?,
        conv_size: f.required("conv_size")?,
        epochs: f.required("epochs")?,
        crop: f.required("crop")?,
        lr: f.required("lr")?,
        lr_cnn: f.required("lr_cnn")?,
        momentum: f.required("momentum")?,
        weight_decay: f.required("weight_decay")?,
    };
    config.validate()?;
    let epochs_done = f.required("epochs_done")?;
    let steps = f.required("steps")?;
    let pcnn_velocity = f.vector("pcnn_velocity")?;
    let conv_weights = f.vector("conv_weights")?;
    let cnn_velocity = f.vector("cnn_velocity")?;
    if let Some(name) = f.0.keys().next() {
        return Err(bad(format!("unknown field {name}")));
    }

    let kernel = match config.model.has_pcnn() {
        true => {
            let k = Kernel::load(kernel_path(stem))?;
            if k.neighborhood() != config.neighborhood {
                return Err(Error::invalid(format!(
                    "kernel neighborhood {} does not match configured {}",
                    k.neighborhood(),
                    config.neighborhood
                )));
            }
            Some(k)
        }
        false => None,
    };
    let conv = match (config.model.has_cnn(), conv_weights) {
        (true, Some(w)) => Some(Conv2DLayer::new(config.conv_size, 1, 1, w)?),
        (true, None) => return Err(bad("missing field conv_weights")),
        (false, Some(_)) => return Err(bad("conv_weights given for a model without a CNN branch")),
        (false, None) => None,
    };
    let model = Denoiser::with_weights(&config, kernel, conv)?;
    let mut optimizers = model.optimizers(&config);
    restore(&mut optimizers.pcnn, pcnn_velocity, "pcnn_velocity")?;
    restore(&mut optimizers.cnn, cnn_velocity, "cnn_velocity")?;
    Ok(Checkpoint {
        config,
        model,
        optimizers,
        epochs_done,
        steps,
    })
}

fn restore(opt: &mut Option<Sgd>, velocity: Option<Vec<f64>>, name: &str) -> Result<()> {
    match (opt.as_mut(), velocity) {
        (Some(sgd), Some(v)) => sgd.set_velocity(v),
        (Some(_), None) => Err(bad(format!("missing field {name}"))),
        (None, Some(_)) => Err(bad(format!(
            "{name} given for a model that does not train it"
        ))),
        (None, None) => Ok(()),
    }
}

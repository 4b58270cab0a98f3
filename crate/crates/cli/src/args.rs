use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcnn::denoise::ModelKind;

#[derive(Debug, Parser)]
#[command(
    name = "pcnn",
    version,
    about = "Permutohedral lattice convolution experiments"
)]
pub struct Cli {
    /// Read defaults from a `key = value` file; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gaussian permutohedral (bilateral) filtering of one image.
    Bilateral(BilateralArgs),
    /// Train a denoiser and write a checkpoint plus a per-epoch log.
    Train(TrainArgs),
    /// Per-image and mean PSNR of a denoiser on a test set.
    Eval(EvalArgs),
    /// Compare analytic gradients with central finite differences.
    Gradcheck(GradcheckArgs),
    /// Time frame construction, splat, convolution and slice.
    Bench(BenchArgs),
    /// Filter a stack of rotated copies jointly in (x, y, angle).
    RotateDemo(RotateArgs),
    /// Reconstruct an image from a random subsample of its pixels.
    ResampleDemo(ResampleArgs),
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Pixels per lattice unit along x and y.
    #[arg(long, default_value_t = 6.0)]
    pub scale_spatial: f64,
    /// Intensity per lattice unit.
    #[arg(long, default_value_t = 0.1)]
    pub scale_intensity: f64,
    /// Kernel neighborhood size s.
    #[arg(long, default_value_t = 2)]
    pub neighborhood: usize,
    /// Gaussian width in lattice steps.
    #[arg(long, default_value_t = 1.0)]
    pub kernel_sigma: f64,
}

#[derive(Debug, Args)]
pub struct BilateralArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Clean image; PSNR of input and output against it is printed.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub filter: FilterArgs,
    /// PCNV kernel to use instead of the Gaussian (d = 3, 1x1 channels).
    #[arg(long, value_name = "PATH")]
    pub kernel: Option<PathBuf>,
    /// Skip the density normalization.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "pcnn-trained")]
    pub model: ModelKind,
    /// Noise standard deviation in [0, 1] units.
    #[arg(long, default_value_t = 25.0 / 255.0)]
    pub sigma: f64,
    /// Clamp noisy observations to [0, 1].
    #[arg(long)]
    pub clamp_noise: bool,
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Spatial convolution size of the CNN branch.
    #[arg(long, default_value_t = 5)]
    pub conv_size: usize,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Side of the random training crop.
    #[arg(long, default_value_t = 128)]
    pub crop: usize,
    /// Learning rate of the permutohedral kernel (of the CNN for `--model cnn`)
    /// [default: 0.1]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Learning rate of the spatial convolution [default: 0.001]
    #[arg(long)]
    pub lr_cnn: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 5e-4)]
    pub weight_decay: f64,
    /// Dataset root with train/, val/ and test/ subdirectories.
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub train_dir: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub val_dir: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub test_dir: Option<PathBuf>,
    /// Use at most this many training images (sorted by name).
    #[arg(long, default_value_t = 50)]
    pub train_limit: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// Output directory for checkpoint.{pcnv,state}, train.log and scales.txt.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Pick the feature scales by validation PSNR of the Gaussian filter first.
    #[arg(long)]
    pub cross_validate: bool,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10")]
    pub spatial_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.3")]
    pub intensity_grid: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Val,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// Checkpoint stem (without extension); otherwise a fresh model is built.
    #[arg(long, value_name = "STEM")]
    pub checkpoint: Option<PathBuf>,
    /// Score the noisy observations instead of a denoiser.
    #[arg(long)]
    pub noisy_input: bool,
    #[arg(long, value_enum, default_value_t = Split::Test)]
    pub split: Split,
    /// Result file: one `name psnr` line per image, then `mean <value>`.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write the denoised images here.
    #[arg(long, value_name = "DIR")]
    pub images: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample count of the permutohedral instances.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Side of the Conv2D instance.
    #[arg(long, default_value_t = 6)]
    pub size: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    /// Exit with status 3 when the worst relative error reaches this.
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub neighborhood: usize,
    #[arg(long, default_value_t = 100_000)]
    pub points: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DemoFilterArgs {
    #[arg(long, default_value_t = 1.0)]
    pub scale_spatial: f64,
    #[arg(long, default_value_t = 1)]
    pub neighborhood: usize,
    #[arg(long, default_value_t = 1.0)]
    pub kernel_sigma: f64,
}

#[derive(Debug, Args)]
pub struct RotateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub angles: usize,
    /// Radians per lattice unit [default: 2 pi / angles]
    #[arg(long)]
    pub angle_scale: Option<f64>,
    #[command(flatten)]
    pub filter: DemoFilterArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SamplingArg {
    Continuous,
    Grid,
}

#[derive(Debug, Args)]
pub struct ResampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// How the splatted samples are drawn.
    #[arg(long, value_enum, default_value_t = SamplingArg::Continuous)]
    pub sampling: SamplingArg,
    /// Write the full-grid reconstruction here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub filter: DemoFilterArgs,
}

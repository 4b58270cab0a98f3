use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use pcnn::autodiff::gradcheck::{self, GradCheckReport, NormCase, PConvCase};
use pcnn::demos::{self, FilterParams};
use pcnn::denoise::{
    cross_validate_scales, load_checkpoint, noisy_input_psnr, observe, save_checkpoint,
    DenoiseConfig, Denoiser, ModelKind, ScaleScore, Trainer,
};
use pcnn::imaging::{bilateral_features, load_image, psnr, save_image, GrayImage, Sampling};
use pcnn::rng::Rng;
use pcnn::{gaussian_kernel, FeatureSet, Kernel, PermutohedralFrame, SignalMatrix};

use crate::args::*;
use crate::dataset::{load_dir, split_dir};
use crate::error::CliError;

type CmdResult = Result<(), CliError>;

pub fn dispatch(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Bilateral(a) => bilateral(a, out),
        Command::Train(a) => train(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Gradcheck(a) => grad_check(a, out),
        Command::Bench(a) => bench(a, out),
        Command::RotateDemo(a) => rotate_demo(a, out),
        Command::ResampleDemo(a) => resample_demo(a, out),
    }
}

fn read(path: &Path) -> Result<GrayImage, CliError> {
    load_image(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, img: &GrayImage) -> CmdResult {
    save_image(path, img).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn fmt_psnr(v: f64) -> String {
    format!("{v:.6}")
}

fn bilateral(a: BilateralArgs, out: &mut dyn Write) -> CmdResult {
    let img = read(&a.input)?;
    let f = &a.filter;
    let kernel = match &a.kernel {
        Some(p) => Kernel::load(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
        None => gaussian_kernel(3, f.neighborhood, f.kernel_sigma)?,
    };
    if kernel.dim() != 3 || kernel.c_in() != 1 || kernel.c_out() != 1 {
        return Err(CliError::Data(format!(
            "kernel must be d=3 with one channel, got d={} {}x{}",
            kernel.dim(),
            kernel.c_out(),
            kernel.c_in()
        )));
    }
    let samples = bilateral_features(&img, f.scale_spatial, f.scale_intensity)?;
    let frame =
        PermutohedralFrame::build(&samples.features, &samples.features, kernel.neighborhood())?;
    let filtered = match a.raw {
        true => frame.filter(&samples.values, &kernel)?,
        false => frame.filter_normalized(&samples.values, &kernel)?,
    };
    if !filtered.is_finite() {
        return Err(CliError::Numeric("filtered image is not finite".into()));
    }
    let result = GrayImage::from_signal(img.height(), img.width(), &filtered)?.clamped();
    write(&a.output, &result)?;
    if let Some(r) = &a.reference {
        let clean = read(r)?;
        writeln!(out, "psnr_input {}", fmt_psnr(psnr(&img, &clean)?))?;
        writeln!(out, "psnr_output {}", fmt_psnr(psnr(&result, &clean)?))?;
    }
    Ok(())
}

fn experiment_config(a: &ExperimentArgs) -> Result<DenoiseConfig, CliError> {
    let lr_cnn = a.lr_cnn.or(if a.model == ModelKind::Cnn {
        a.lr
    } else {
        None
    });
    let config = DenoiseConfig {
        model: a.model,
        seed: a.seed,
        noise_sigma: a.sigma,
        clamp_noise: a.clamp_noise,
        spatial_scale: a.filter.scale_spatial,
        intensity_scale: a.filter.scale_intensity,
        neighborhood: a.filter.neighborhood,
        kernel_sigma: a.filter.kernel_sigma,
        conv_size: a.conv_size,
        epochs: a.epochs,
        crop: a.crop,
        lr: a.lr.unwrap_or(0.1),
        lr_cnn: lr_cnn.unwrap_or(1e-3),
        momentum: a.momentum,
        weight_decay: a.weight_decay,
    };
    config.validate()?;
    if a.train_limit == 0 {
        return Err(CliError::Usage("--train-limit must be positive".into()));
    }
    Ok(config)
}

fn train(a: TrainArgs, out: &mut dyn Write) -> CmdResult {
    let mut config = experiment_config(&a.exp)?;
    let train_dir = split_dir(&a.exp.train_dir, &a.exp.data, "train")?;
    let val_dir = split_dir(&a.exp.val_dir, &a.exp.data, "val")?;
    let train: Vec<GrayImage> = load_dir(&train_dir, a.exp.train_limit)?
        .into_iter()
        .map(|(_, img)| img)
        .collect();
    let val = load_dir(&val_dir, usize::MAX)?;
    std::fs::create_dir_all(&a.out)?;

    if a.cross_validate {
        let scores = cross_validate_scales(&val, &config, &a.spatial_grid, &a.intensity_grid)?;
        let best = ScaleScore::best(&scores)
            .ok_or_else(|| CliError::Usage("empty cross-validation grid".into()))?;
        if !best.psnr.is_finite() {
            return Err(CliError::Numeric(
                "cross-validation PSNR is not finite".into(),
            ));
        }
        let mut table = String::new();
        for s in &scores {
            table.push_str(&format!(
                "{} {} {}\n",
                s.spatial,
                s.intensity,
                fmt_psnr(s.psnr)
            ));
        }
        table.push_str(&format!("best {} {}\n", best.spatial, best.intensity));
        std::fs::write(a.out.join("scales.txt"), table)?;
        writeln!(out, "scales {} {}", best.spatial, best.intensity)?;
        config.spatial_scale = best.spatial;
        config.intensity_scale = best.intensity;
    }

    let mut log = BufWriter::new(File::create(a.out.join("train.log"))?);
    let mut trainer = Trainer::new(config)?;
    let fitted = trainer.fit(&train, &val, |r| {
        let _ = writeln!(out, "{r}");
        let _ = writeln!(log, "{r}");
    });
    log.flush()?;
    fitted?;
    let stem = a.out.join("checkpoint");
    save_checkpoint(&stem, &trainer.checkpoint())?;
    writeln!(out, "checkpoint {}", stem.display())?;
    Ok(())
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> CmdResult {
    let config = experiment_config(&a.exp)?;
    let dir = match a.split {
        Split::Val => split_dir(&a.exp.val_dir, &a.exp.data, "val")?,
        Split::Test => split_dir(&a.exp.test_dir, &a.exp.data, "test")?,
    };
    let images = load_dir(&dir, usize::MAX)?;
    let (sigma, clamp, seed) = (config.noise_sigma, config.clamp_noise, config.seed);
    let results = if a.noisy_input {
        noisy_input_psnr(&images, sigma, clamp, seed)?
    } else {
        let model = match &a.checkpoint {
            Some(stem) => load_checkpoint(stem)?.model,
            None => Denoiser::new(&config)?,
        };
        if let Some(d) = &a.images {
            std::fs::create_dir_all(d)?;
        }
        let observed = observe(&images, sigma, clamp, seed);
        let mut results = Vec::with_capacity(images.len());
        for ((name, clean), obs) in images.iter().zip(&observed) {
            let estimate = model.predict(obs)?;
            if let Some(d) = &a.images {
                write(&d.join(format!("{name}.pgm")), &estimate)?;
            }
            results.push((name.clone(), psnr(&estimate, clean)?));
        }
        results
    };
    if results.iter().any(|r| r.1.is_nan()) {
        return Err(CliError::Numeric("PSNR is NaN".into()));
    }
    let mean = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
    let mut text = String::new();
    for (name, p) in &results {
        text.push_str(&format!("{name} {}\n", fmt_psnr(*p)));
    }
    text.push_str(&format!("mean {}\n", fmt_psnr(mean)));
    out.write_all(text.as_bytes())?;
    if let Some(path) = &a.out {
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn report_line(out: &mut dyn Write, r: &GradCheckReport) -> std::io::Result<()> {
    writeln!(
        out,
        "{} input {:.3e} param {:.3e}",
        r.name, r.input_error, r.param_error
    )
}

fn grad_check(a: GradcheckArgs, out: &mut dyn Write) -> CmdResult {
    if !(a.eps > 0.0) || a.points == 0 || a.size == 0 {
        return Err(CliError::Usage(
            "eps, points and size must be positive".into(),
        ));
    }
    let mut reports = Vec::new();
    for (i, norm) in [NormCase::None, NormCase::Scale, NormCase::Density]
        .into_iter()
        .enumerate()
    {
        let case = PConvCase {
            points: a.points,
            norm,
            ..PConvCase::default()
        };
        reports.push(gradcheck::pconv(a.seed + i as u64, case, a.eps)?);
    }
    reports.push(gradcheck::conv2d(a.seed, 5, a.size, a.size, 2, a.eps)?);
    reports.push(gradcheck::sum(a.seed, a.points, a.eps)?);
    reports.push(gradcheck::loss(a.seed, a.points, a.eps)?);
    reports.push(gradcheck::pconv_delta(a.seed, a.eps)?);
    for r in &reports {
        report_line(out, r)?;
    }
    let ratio = gradcheck::truncation_ratio(a.seed, 1e-2)?;
    writeln!(out, "fd-scaling ratio {ratio:.4}")?;
    let worst = reports
        .iter()
        .map(GradCheckReport::worst)
        .fold(0.0, f64::max);
    writeln!(out, "worst {worst:.3e}")?;
    if !(worst < a.threshold) {
        return Err(CliError::Numeric(format!(
            "worst relative error {worst:.3e} exceeds {:.1e}",
            a.threshold
        )));
    }
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> CmdResult {
    if a.points == 0 || a.repeats == 0 || a.dim == 0 {
        return Err(CliError::Usage(
            "dim, points and repeats must be positive".into(),
        ));
    }
    // About one sample per unit cube of lattice space.
    let side = (a.points as f64).powf(1.0 / a.dim as f64);
    let mut rng = Rng::new(a.seed);
    let coords = (0..a.points * a.dim)
        .map(|_| rng.uniform() * side)
        .collect();
    let features = FeatureSet::new(a.dim, coords)?;
    let values = SignalMatrix::column((0..a.points).map(|_| rng.uniform()).collect())?;
    let kernel = gaussian_kernel(a.dim, a.neighborhood, 1.0)?;

    let mut best = [Duration::MAX; 4];
    let mut nodes = 0;
    for _ in 0..a.repeats {
        let t = Instant::now();
        let frame = PermutohedralFrame::build(&features, &features, a.neighborhood)?;
        let t_build = t.elapsed();
        let t = Instant::now();
        let lattice = frame.splat(&values)?;
        let t_splat = t.elapsed();
        let t = Instant::now();
        let blurred = frame.convolve(&lattice, &kernel)?;
        let t_conv = t.elapsed();
        let t = Instant::now();
        let sliced = frame.slice(&blurred)?;
        let t_slice = t.elapsed();
        if !sliced.is_finite() {
            return Err(CliError::Numeric("benchmark output is not finite".into()));
        }
        nodes = frame.node_count();
        for (b, t) in best.iter_mut().zip([t_build, t_splat, t_conv, t_slice]) {
            *b = (*b).min(t);
        }
    }
    let per = |d: Duration| d.as_nanos() as f64 / a.points as f64;
    writeln!(
        out,
        "d {} s {} points {} nodes {} taps {}",
        a.dim,
        a.neighborhood,
        a.points,
        nodes,
        kernel.taps()
    )?;
    writeln!(out, "stage ns/sample")?;
    for (name, d) in ["build_frame", "splat", "convolve", "slice"]
        .iter()
        .zip(best)
    {
        writeln!(out, "{name} {:.1}", per(d))?;
    }
    writeln!(out, "total {:.1}", per(best.iter().sum()))?;
    Ok(())
}

fn demo_params(f: &DemoFilterArgs) -> FilterParams {
    FilterParams {
        spatial_scale: f.scale_spatial,
        neighborhood: f.neighborhood,
        kernel_sigma: f.kernel_sigma,
    }
}

fn rotate_demo(a: RotateArgs, out: &mut dyn Write) -> CmdResult {
    if a.angles == 0 {
        return Err(CliError::Usage("--angles must be at least 1".into()));
    }
    let img = read(&a.input)?;
    let angle_scale = a.angle_scale.unwrap_or(2.0 * PI / a.angles as f64);
    let result = demos::rotation_filter(&img, a.angles, angle_scale, demo_params(&a.filter))?;
    write(&a.output, &result)?;
    writeln!(out, "angles {} samples {}", a.angles, a.angles * img.len())?;
    Ok(())
}

fn resample_demo(a: ResampleArgs, out: &mut dyn Write) -> CmdResult {
    let img = read(&a.input)?;
    let sampling = match a.sampling {
        SamplingArg::Continuous => Sampling::Continuous,
        SamplingArg::Grid => Sampling::Grid,
    };
    let report = demos::resample(
        &img,
        a.train_fraction,
        a.test_fraction,
        a.seed,
        sampling,
        demo_params(&a.filter),
    )?;
    if let Some(p) = &a.output {
        write(p, &report.reconstruction)?;
    }
    writeln!(out, "train_samples {}", report.train_samples)?;
    writeln!(out, "test_samples {}", report.test_samples)?;
    writeln!(out, "psnr {}", fmt_psnr(report.psnr))?;
    Ok(())
}

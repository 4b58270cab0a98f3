//! Central finite-difference checks of the analytic backward passes.
//!
//! Each check builds a random instance, takes the Euclidean loss against a
//! random target as the scalar objective, and compares the analytic gradient
//! of every input entry and every weight with `(L(x + eps) - L(x - eps)) / 2 eps`.
//! Reported errors use [`relative_error`].

use std::sync::Arc;

use crate::error::Result;
use crate::features::FeatureSet;
use crate::filterbank::{gaussian_kernel, Kernel, PermutohedralFrame, SignalMatrix};
use crate::rng::Rng;

use super::{euclidean_loss, sum_backward, sum_forward, Conv2DLayer, Normalization, PConvLayer};

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Worst relative error of `analytic` against central differences of `f` at `x`.
pub fn check_gradient(
    x: &[f64],
    analytic: &[f64],
    eps: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    assert_eq!(x.len(), analytic.len());
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        probe[i] = x[i] + eps;
        let up = f(&probe);
        probe[i] = x[i] - eps;
        let down = f(&probe);
        probe[i] = x[i];
        worst = worst.max(relative_error(analytic[i], (up - down) / (2.0 * eps)));
    }
    worst
}

/// Like [`check_gradient`] for `L(x) = euclidean_loss(forward(x), target)`.
///
/// The loss difference is evaluated as `sum (o+ - o-)(o+ + o- - 2 t) / 2R`,
/// the same quantity as `L(x + eps) - L(x - eps)`, except that rows the
/// perturbation does not reach cancel exactly instead of contributing the
/// rounding error of two full sums.
pub fn check_loss_gradient(
    x: &[f64],
    analytic: &[f64],
    eps: f64,
    target: &SignalMatrix,
    mut forward: impl FnMut(&[f64]) -> SignalMatrix,
) -> f64 {
    assert_eq!(x.len(), analytic.len());
    let t = target.as_slice();
    let rows = target.rows() as f64;
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        probe[i] = x[i] + eps;
        let up = forward(&probe);
        probe[i] = x[i] - eps;
        let down = forward(&probe);
        probe[i] = x[i];
        let delta: f64 = up
            .as_slice()
            .iter()
            .zip(down.as_slice())
            .zip(t)
            .map(|((u, d), t)| (u - d) * (u + d - 2.0 * t))
            .sum::<f64>()
            / (2.0 * rows);
        worst = worst.max(relative_error(analytic[i], delta / (2.0 * eps)));
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub name: String,
    pub input_error: f64,
    pub param_error: f64,
}

impl GradCheckReport {
    pub fn worst(&self) -> f64 {
        self.input_error.max(self.param_error)
    }
}

fn random_vec(rng: &mut Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.uniform_in(lo, hi)).collect()
}

fn random_signal(rng: &mut Rng, rows: usize, cols: usize) -> SignalMatrix {
    SignalMatrix::new(rows, cols, random_vec(rng, rows * cols, -1.0, 1.0)).expect("finite")
}

/// Instance parameters for [`pconv`].
#[derive(Clone, Copy, Debug)]
pub struct PConvCase {
    pub points: usize,
    pub d: usize,
    pub s: usize,
    pub channels: usize,
    pub norm: NormCase,
}

/// Output normalization exercised by [`pconv`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormCase {
    None,
    /// Fixed random per-output factors.
    Scale,
    /// Division by the layer's own density. Weights are drawn positive so the
    /// density stays away from zero, and small: the layer is invariant to the
    /// kernel's scale, so its weight gradient grows as the weights shrink and
    /// rises further above the rounding floor of the difference quotients.
    Density,
}

impl Default for PConvCase {
    fn default() -> Self {
        Self {
            points: 50,
            d: 3,
            s: 1,
            channels: 2,
            norm: NormCase::None,
        }
    }
}

pub fn pconv(seed: u64, case: PConvCase, eps: f64) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let PConvCase {
        points,
        d,
        s,
        channels: c,
        norm,
    } = case;
    // Features spread over a few lattice cells so neighborhoods overlap.
    let f_in = FeatureSet::new(d, random_vec(&mut rng, points * d, 0.0, 2.5))?;
    let f_out = FeatureSet::new(d, random_vec(&mut rng, (points / 2).max(1) * d, 0.0, 2.5))?;
    let frame = Arc::new(PermutohedralFrame::build(&f_in, &f_out, s)?);
    let taps = frame.offsets().len();
    let (lo, hi) = if norm == NormCase::Density {
        (0.05, 0.15)
    } else {
        (-1.0, 1.0)
    };
    let kernel = Kernel::new(d, s, c, c, random_vec(&mut rng, c * c * taps, lo, hi))?;
    let normalization = match norm {
        NormCase::None => Normalization::None,
        NormCase::Scale => {
            Normalization::Scale(random_vec(&mut rng, frame.output_count(), 0.5, 2.0))
        }
        NormCase::Density => Normalization::Density,
    };
    let mut layer =
        PConvLayer::new(frame.clone(), kernel.clone())?.with_normalization(normalization)?;
    let x = random_signal(&mut rng, points, c);
    let target = random_signal(&mut rng, frame.output_count(), c);

    let out = layer.forward(&x)?;
    let (_, g) = euclidean_loss(&out, &target)?;
    let (grad_x, grad_k) = layer.backward(&g)?;

    let mut probe = layer.clone();
    let input_error = check_loss_gradient(x.as_slice(), grad_x.as_slice(), eps, &target, |v| {
        let xs = SignalMatrix::new(x.rows(), x.cols(), v.to_vec()).expect("finite");
        probe.forward(&xs).expect("forward")
    });
    let mut probe = layer.clone();
    let param_error = check_loss_gradient(kernel.weights(), grad_k.weights(), eps, &target, |w| {
        probe.kernel_mut().weights_mut().copy_from_slice(w);
        probe.forward(&x).expect("forward")
    });
    Ok(GradCheckReport {
        name: match norm {
            NormCase::None => format!("pconv(n={points}, d={d}, s={s}, c={c})"),
            NormCase::Scale => format!("pconv(n={points}, d={d}, s={s}, c={c}, scaled)"),
            NormCase::Density => format!("pconv(n={points}, d={d}, s={s}, c={c}, normalized)"),
        },
        input_error,
        param_error,
    })
}

pub fn conv2d(
    seed: u64,
    size: usize,
    height: usize,
    width: usize,
    channels: usize,
    eps: f64,
) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let mut layer = Conv2DLayer::uniform_init(size, channels, channels, rng.next_u64())?;
    let x = random_signal(&mut rng, height * width, channels);
    let target = random_signal(&mut rng, height * width, channels);
    let out = layer.forward(&x, height, width)?;
    let (_, g) = euclidean_loss(&out, &target)?;
    let (grad_x, grad_w) = layer.backward(&g)?;
    let weights = layer.weights().to_vec();

    let mut probe = layer.clone();
    let input_error = check_loss_gradient(x.as_slice(), grad_x.as_slice(), eps, &target, |v| {
        let xs = SignalMatrix::new(x.rows(), x.cols(), v.to_vec()).expect("finite");
        probe.forward(&xs, height, width).expect("forward")
    });
    let mut probe = layer.clone();
    let param_error = check_loss_gradient(&weights, &grad_w, eps, &target, |w| {
        probe.weights_mut().copy_from_slice(w);
        probe.forward(&x, height, width).expect("forward")
    });
    Ok(GradCheckReport {
        name: format!("conv2d(k={size}, {height}x{width}, c={channels})"),
        input_error,
        param_error,
    })
}

/// Sum layer: both summands are checked as inputs.
pub fn sum(seed: u64, rows: usize, eps: f64) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let a = random_signal(&mut rng, rows, 2);
    let b = random_signal(&mut rng, rows, 2);
    let target = random_signal(&mut rng, rows, 2);
    let (_, g) = euclidean_loss(&sum_forward(&a, &b)?, &target)?;
    let (ga, gb) = sum_backward(&g);
    let matrix = |v: &[f64]| SignalMatrix::new(rows, 2, v.to_vec()).expect("finite");
    let ea = check_loss_gradient(a.as_slice(), ga.as_slice(), eps, &target, |v| {
        sum_forward(&matrix(v), &b).expect("sum")
    });
    let eb = check_loss_gradient(b.as_slice(), gb.as_slice(), eps, &target, |v| {
        sum_forward(&a, &matrix(v)).expect("sum")
    });
    Ok(GradCheckReport {
        name: format!("sum(rows={rows})"),
        input_error: ea.max(eb),
        param_error: 0.0,
    })
}

/// Euclidean loss with respect to the prediction.
pub fn loss(seed: u64, rows: usize, eps: f64) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let pred = random_signal(&mut rng, rows, 3);
    let target = random_signal(&mut rng, rows, 3);
    let (_, g) = euclidean_loss(&pred, &target)?;
    let input_error = check_gradient(pred.as_slice(), g.as_slice(), eps, |v| {
        let p = SignalMatrix::new(rows, 3, v.to_vec()).expect("finite");
        euclidean_loss(&p, &target).expect("loss").0
    });
    Ok(GradCheckReport {
        name: format!("euclidean_loss(rows={rows})"),
        input_error,
        param_error: 0.0,
    })
}

/// Delta kernel on features sitting exactly on distinct lattice points: the
/// layer is the identity and its gradients are exact.
pub fn pconv_delta(seed: u64, eps: f64) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let d = 2;
    let mut coords = Vec::new();
    for a in 0..4i32 {
        for b in 0..3i32 {
            let e = [3.0 * a as f64, 3.0 * b as f64, -3.0 * (a + b) as f64];
            coords.extend(crate::lattice::feature_from_elevated(&e));
        }
    }
    let features = FeatureSet::new(d, coords)?;
    let frame = Arc::new(PermutohedralFrame::build(&features, &features, 1)?);
    let kernel = Kernel::delta(d, 1, 1)?;
    let mut layer = PConvLayer::new(frame, kernel.clone())?;
    let x = random_signal(&mut rng, features.len(), 1);
    let target = random_signal(&mut rng, features.len(), 1);
    let out = layer.forward(&x)?;
    let (_, g) = euclidean_loss(&out, &target)?;
    let (grad_x, grad_k) = layer.backward(&g)?;
    let mut probe = layer.clone();
    let input_error = check_loss_gradient(x.as_slice(), grad_x.as_slice(), eps, &target, |v| {
        let xs = SignalMatrix::new(x.rows(), 1, v.to_vec()).expect("finite");
        probe.forward(&xs).expect("forward")
    });
    let mut probe = layer.clone();
    let param_error = check_loss_gradient(kernel.weights(), grad_k.weights(), eps, &target, |w| {
        probe.kernel_mut().weights_mut().copy_from_slice(w);
        probe.forward(&x).expect("forward")
    });
    Ok(GradCheckReport {
        name: "pconv(delta, lattice-exact)".into(),
        input_error,
        param_error,
    })
}

/// Ratio of central-difference truncation errors at `2 eps` and `eps` on a
/// smooth objective `sum_k y_k sin(out_k)` through a Gaussian pconv layer.
/// Second-order accuracy puts it near 4.
pub fn truncation_ratio(seed: u64, eps: f64) -> Result<f64> {
    let mut rng = Rng::new(seed);
    let d = 2;
    let n = 30;
    let f = FeatureSet::new(d, random_vec(&mut rng, n * d, 0.0, 2.0))?;
    let frame = Arc::new(PermutohedralFrame::build(&f, &f, 1)?);
    let mut layer = PConvLayer::new(frame, gaussian_kernel(d, 1, 1.0)?)?;
    let x = SignalMatrix::new(n, 1, random_vec(&mut rng, n, 1.0, 3.0))?;
    let y = random_vec(&mut rng, n, -1.0, 1.0);

    let objective = |layer: &mut PConvLayer, x: &SignalMatrix| -> f64 {
        let out = layer.forward(x).expect("forward");
        out.as_slice()
            .iter()
            .zip(&y)
            .map(|(o, w)| w * o.sin())
            .sum()
    };
    let out = layer.forward(&x)?;
    let g: Vec<f64> = out
        .as_slice()
        .iter()
        .zip(&y)
        .map(|(o, w)| w * o.cos())
        .collect();
    let (grad_x, _) = layer.backward(&SignalMatrix::column(g)?)?;

    let mut probe = layer.clone();
    let mut max_err = |h: f64| -> f64 {
        let mut worst = 0.0f64;
        let mut v = x.as_slice().to_vec();
        for i in 0..n {
            v[i] = x.as_slice()[i] + h;
            let up = objective(
                &mut probe,
                &SignalMatrix::column(v.clone()).expect("finite"),
            );
            v[i] = x.as_slice()[i] - h;
            let down = objective(
                &mut probe,
                &SignalMatrix::column(v.clone()).expect("finite"),
            );
            v[i] = x.as_slice()[i];
            worst = worst.max(((up - down) / (2.0 * h) - grad_x.as_slice()[i]).abs());
        }
        worst
    };
    let small = max_err(eps);
    let large = max_err(2.0 * eps);
    Ok(large / small)
}

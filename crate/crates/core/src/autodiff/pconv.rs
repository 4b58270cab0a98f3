use std::sync::Arc;

use crate::error::{Error, Result};
use crate::filterbank::{inverse_density, Kernel, PermutohedralFrame, SignalMatrix};

/// How the raw pipeline output `P_w(v) = slice(convolve_w(splat(v)))` is
/// normalized.
#[derive(Clone, Debug, PartialEq)]
pub enum Normalization {
    None,
    /// Fixed per-output factor, e.g. the inverse density of a reference kernel.
    Scale(Vec<f64>),
    /// Divide by the layer's own density `P_w(1)`, so the layer is a weighted
    /// average whose weights are learned. Outputs without support are zero.
    Density,
}

#[derive(Clone, Debug)]
struct Cache {
    lattice: SignalMatrix,
    /// Density state: splatted ones, per-entry inverse density and output.
    density: Option<(SignalMatrix, SignalMatrix, SignalMatrix)>,
}

/// Permutohedral convolution layer: `slice(convolve(splat(v)))`, optionally
/// normalized.
#[derive(Clone, Debug)]
pub struct PConvLayer {
    frame: Arc<PermutohedralFrame>,
    kernel: Kernel,
    norm: Normalization,
    cache: Option<Cache>,
}

impl PConvLayer {
    pub fn new(frame: Arc<PermutohedralFrame>, kernel: Kernel) -> Result<Self> {
        kernel.check_offsets(frame.offsets())?;
        Ok(Self {
            frame,
            kernel,
            norm: Normalization::None,
            cache: None,
        })
    }

    pub fn with_output_scale(self, scale: Vec<f64>) -> Result<Self> {
        self.with_normalization(Normalization::Scale(scale))
    }

    pub fn with_normalization(mut self, norm: Normalization) -> Result<Self> {
        self.set_normalization(norm)?;
        Ok(self)
    }

    /// Swaps in a new frame; clears the forward cache.
    pub fn set_frame(&mut self, frame: Arc<PermutohedralFrame>, norm: Normalization) -> Result<()> {
        self.kernel.check_offsets(frame.offsets())?;
        self.frame = frame;
        self.cache = None;
        self.norm = Normalization::None;
        self.set_normalization(norm)
    }

    fn set_normalization(&mut self, norm: Normalization) -> Result<()> {
        if let Normalization::Scale(s) = &norm {
            if s.len() != self.frame.output_count() {
                return Err(Error::shape(format!(
                    "{} output scales for {} outputs",
                    s.len(),
                    self.frame.output_count()
                )));
            }
            if s.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("output scales must be finite"));
            }
        }
        self.norm = norm;
        self.cache = None;
        Ok(())
    }

    pub fn frame(&self) -> &PermutohedralFrame {
        &self.frame
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn kernel_mut(&mut self) -> &mut Kernel {
        &mut self.kernel
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    fn pipeline(&self, lattice: &SignalMatrix) -> Result<SignalMatrix> {
        self.frame
            .slice(&self.frame.convolve(lattice, &self.kernel)?)
    }

    pub fn forward(&mut self, input: &SignalMatrix) -> Result<SignalMatrix> {
        if input.cols() != self.kernel.c_in() {
            return Err(Error::shape(format!(
                "{} input channels for a kernel with {}",
                input.cols(),
                self.kernel.c_in()
            )));
        }
        let lattice = self.frame.splat(input)?;
        let mut out = self.pipeline(&lattice)?;
        let mut density = None;
        match &self.norm {
            Normalization::None => {}
            Normalization::Scale(scale) => {
                for (k, &s) in scale.iter().enumerate() {
                    out.row_mut(k).iter_mut().for_each(|x| *x *= s);
                }
            }
            Normalization::Density => {
                let ones =
                    self.frame
                        .splat(&SignalMatrix::filled(input.rows(), input.cols(), 1.0))?;
                let mut inv = self.pipeline(&ones)?;
                inv.as_mut_slice()
                    .iter_mut()
                    .for_each(|w| *w = inverse_density(*w));
                out.as_mut_slice()
                    .iter_mut()
                    .zip(inv.as_slice())
                    .for_each(|(x, r)| *x *= r);
                density = Some((ones, inv, out.clone()));
            }
        }
        self.cache = Some(Cache { lattice, density });
        Ok(out)
    }

    /// Returns `(grad_input, grad_kernel)`.
    ///
    /// With `g` the output gradient of the unnormalized pipeline, the lattice
    /// gradient is `slice^T g`; the kernel gradient pairs it with the cached
    /// splatted input along every offset; the input gradient runs the lattice
    /// gradient through the transposed kernel and `splat^T`. Under density
    /// normalization `out = N / D`, so `N` receives `g / D` and `D` receives
    /// `-g out / D`, the latter only reaching the kernel.
    pub fn backward(&self, grad_out: &SignalMatrix) -> Result<(SignalMatrix, Kernel)> {
        let cache = self.cache.as_ref().ok_or(Error::BackwardBeforeForward)?;
        if grad_out.shape() != (self.frame.output_count(), self.kernel.c_out()) {
            return Err(Error::shape(format!(
                "output gradient {:?}, expected {:?}",
                grad_out.shape(),
                (self.frame.output_count(), self.kernel.c_out())
            )));
        }
        let mut g = grad_out.clone();
        match (&self.norm, &cache.density) {
            (Normalization::Scale(scale), _) => {
                for (k, &s) in scale.iter().enumerate() {
                    g.row_mut(k).iter_mut().for_each(|x| *x *= s);
                }
            }
            (Normalization::Density, Some((_, inv, _))) => {
                g.as_mut_slice()
                    .iter_mut()
                    .zip(inv.as_slice())
                    .for_each(|(x, r)| *x *= r);
            }
            _ => {}
        }
        let g_lattice = self.frame.slice_adjoint(&g)?;
        let mut grad_w = self.frame.kernel_gradient(&g_lattice, &cache.lattice)?;
        if let Some((ones, _, out)) = &cache.density {
            let mut gd = g.clone();
            gd.as_mut_slice()
                .iter_mut()
                .zip(out.as_slice())
                .for_each(|(x, o)| *x *= -o);
            let gd_lattice = self.frame.slice_adjoint(&gd)?;
            let extra = self.frame.kernel_gradient(&gd_lattice, ones)?;
            grad_w.iter_mut().zip(extra).for_each(|(a, b)| *a += b);
        }
        let grad_kernel = Kernel::new(
            self.kernel.dim(),
            self.kernel.neighborhood(),
            self.kernel.c_out(),
            self.kernel.c_in(),
            grad_w,
        )?;
        let transposed = self.kernel.transposed(self.frame.offsets())?;
        let g_in_lattice = self.frame.convolve(&g_lattice, &transposed)?;
        let grad_in = self.frame.splat_adjoint(&g_in_lattice)?;
        Ok((grad_in, grad_kernel))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureSet;
    use crate::lattice::{elevate, locate};

    fn single_point_layer(kernel: Kernel) -> PConvLayer {
        let f = FeatureSet::new(2, vec![0.3, 0.8]).unwrap();
        let frame = Arc::new(PermutohedralFrame::build(&f, &f, kernel.neighborhood()).unwrap());
        PConvLayer::new(frame, kernel).unwrap()
    }

    #[test]
    fn backward_requires_forward() {
        let layer = single_point_layer(Kernel::delta(2, 0, 1).unwrap());
        let g = SignalMatrix::zeros(1, 1);
        assert!(matches!(
            layer.backward(&g),
            Err(Error::BackwardBeforeForward)
        ));
    }

    #[test]
    fn zero_output_gradient() {
        let mut layer = single_point_layer(crate::gaussian_kernel(2, 1, 1.0).unwrap());
        layer
            .forward(&SignalMatrix::column(vec![0.7]).unwrap())
            .unwrap();
        let (gi, gk) = layer.backward(&SignalMatrix::zeros(1, 1)).unwrap();
        assert!(gi.as_slice().iter().all(|&x| x == 0.0));
        assert!(gk.weights().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_point_center_tap() {
        // s = 0: out = w v sum_j b_j^2, so dL/dw = g v sum_j b_j^2.
        let w = 1.7;
        let v = 0.6;
        let g = -0.9;
        let kernel = Kernel::new(2, 0, 1, 1, vec![w]).unwrap();
        let mut layer = single_point_layer(kernel);
        let out = layer
            .forward(&SignalMatrix::column(vec![v]).unwrap())
            .unwrap();
        let b2: f64 = locate(&elevate(&[0.3, 0.8]).unwrap())
            .unwrap()
            .barycentric
            .iter()
            .map(|b| b * b)
            .sum();
        assert!((out.get(0, 0) - w * v * b2).abs() < 1e-14);
        let (gi, gk) = layer
            .backward(&SignalMatrix::column(vec![g]).unwrap())
            .unwrap();
        assert!((gk.weights()[0] - g * v * b2).abs() < 1e-14);
        assert!((gi.get(0, 0) - g * w * b2).abs() < 1e-14);
    }

    #[test]
    fn shape_errors() {
        let mut layer = single_point_layer(Kernel::delta(2, 0, 1).unwrap());
        assert!(layer.forward(&SignalMatrix::zeros(2, 1)).is_err());
        assert!(layer.forward(&SignalMatrix::zeros(1, 2)).is_err());
        layer.forward(&SignalMatrix::zeros(1, 1)).unwrap();
        assert!(layer.backward(&SignalMatrix::zeros(1, 2)).is_err());
        assert!(layer.clone().with_output_scale(vec![1.0, 2.0]).is_err());
    }
}

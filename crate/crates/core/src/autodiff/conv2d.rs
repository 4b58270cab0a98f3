use crate::error::{Error, Result};
use crate::filterbank::SignalMatrix;
use crate::rng::Rng;

/// Zero-padded "same" 2-D cross-correlation over `H x W x C` images stored as
/// `(H W) x C` signals in row-major pixel order.
#[derive(Clone, Debug)]
pub struct Conv2DLayer {
    size: usize,
    c_out: usize,
    c_in: usize,
    weights: Vec<f64>,
    cache: Option<(SignalMatrix, usize, usize)>,
}

impl Conv2DLayer {
    pub fn new(size: usize, c_out: usize, c_in: usize, weights: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "kernel size must be odd, got {size}"
            )));
        }
        if c_out == 0 || c_in == 0 {
            return Err(Error::invalid("channel counts must be positive"));
        }
        if weights.len() != c_out * c_in * size * size {
            return Err(Error::shape(format!(
                "{} weights for a {c_out}x{c_in}x{size}x{size} kernel",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        Ok(Self {
            size,
            c_out,
            c_in,
            weights,
            cache: None,
        })
    }

    pub fn zeros(size: usize, c_out: usize, c_in: usize) -> Result<Self> {
        Self::new(size, c_out, c_in, vec![0.0; c_out * c_in * size * size])
    }

    /// Uniform weights in `[-r, r]`, `r = 1 / sqrt(c_in k^2)`.
    pub fn uniform_init(size: usize, c_out: usize, c_in: usize, seed: u64) -> Result<Self> {
        let r = 1.0 / ((c_in * size * size) as f64).sqrt();
        let mut rng = Rng::new(seed);
        let w = (0..c_out * c_in * size * size)
            .map(|_| rng.uniform_in(-r, r))
            .collect();
        Self::new(size, c_out, c_in, w)
    }

    pub fn delta(size: usize, channels: usize) -> Result<Self> {
        let mut layer = Self::zeros(size, channels, channels)?;
        let mid = size / 2;
        for c in 0..channels {
            let i = layer.index(c, c, mid, mid);
            layer.weights[i] = 1.0;
        }
        Ok(layer)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    #[inline]
    fn index(&self, co: usize, ci: usize, dy: usize, dx: usize) -> usize {
        ((co * self.c_in + ci) * self.size + dy) * self.size + dx
    }

    pub fn forward(
        &mut self,
        input: &SignalMatrix,
        height: usize,
        width: usize,
    ) -> Result<SignalMatrix> {
        if input.shape() != (height * width, self.c_in) {
            return Err(Error::shape(format!(
                "input {:?} for a {height}x{width}x{} image",
                input.shape(),
                self.c_in
            )));
        }
        let out = correlate(
            input,
            height,
            width,
            self.size,
            self.c_in,
            self.c_out,
            |co, ci, dy, dx| self.weights[self.index(co, ci, dy, dx)],
        );
        self.cache = Some((input.clone(), height, width));
        Ok(out)
    }

    /// Returns `(grad_input, grad_weights)`.
    pub fn backward(&self, grad_out: &SignalMatrix) -> Result<(SignalMatrix, Vec<f64>)> {
        let (input, h, w) = self.cache.as_ref().ok_or(Error::BackwardBeforeForward)?;
        let (h, w) = (*h, *w);
        if grad_out.shape() != (h * w, self.c_out) {
            return Err(Error::shape(format!(
                "output gradient {:?}, expected {:?}",
                grad_out.shape(),
                (h * w, self.c_out)
            )));
        }
        let k = self.size;
        // The adjoint of a correlation is a correlation with the flipped,
        // channel-transposed kernel.
        let grad_in = correlate(
            grad_out,
            h,
            w,
            k,
            self.c_out,
            self.c_in,
            |ci, co, dy, dx| self.weights[self.index(co, ci, k - 1 - dy, k - 1 - dx)],
        );

        let p = (k / 2) as isize;
        let mut grad_w = vec![0.0; self.weights.len()];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let g = grad_out.row((y * w as isize + x) as usize);
                for dy in 0..k as isize {
                    let sy = y + dy - p;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for dx in 0..k as isize {
                        let sx = x + dx - p;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        let src = input.row((sy * w as isize + sx) as usize);
                        for (co, gv) in g.iter().enumerate() {
                            for (ci, xv) in src.iter().enumerate() {
                                grad_w[self.index(co, ci, dy as usize, dx as usize)] += gv * xv;
                            }
                        }
                    }
                }
            }
        }
        Ok((grad_in, grad_w))
    }
}

fn correlate(
    input: &SignalMatrix,
    h: usize,
    w: usize,
    k: usize,
    c_in: usize,
    c_out: usize,
    weight: impl Fn(usize, usize, usize, usize) -> f64,
) -> SignalMatrix {
    let p = (k / 2) as isize;
    let mut out = SignalMatrix::zeros(h * w, c_out);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let dst = out.row_mut((y * w as isize + x) as usize);
            for dy in 0..k as isize {
                let sy = y + dy - p;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for dx in 0..k as isize {
                    let sx = x + dx - p;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let src = input.row((sy * w as isize + sx) as usize);
                    for (co, o) in dst.iter_mut().enumerate() {
                        for (ci, v) in src.iter().enumerate().take(c_in) {
                            *o += weight(co, ci, dy as usize, dx as usize) * v;
                        }
                    }
                }
            }
        }
    }
    out
}

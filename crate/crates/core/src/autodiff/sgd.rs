use crate::error::{Error, Result};

/// SGD with momentum and L2 weight decay on one parameter tensor.
///
/// `v <- momentum v - lr (g + weight_decay p)`, then `p <- p + v`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sgd {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Vec<f64>,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64, weight_decay: f64, len: usize) -> Self {
        Self {
            lr,
            momentum,
            weight_decay,
            velocity: vec![0.0; len],
        }
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn set_velocity(&mut self, v: Vec<f64>) -> Result<()> {
        if v.len() != self.velocity.len() {
            return Err(Error::shape(format!(
                "{} velocity entries for {} parameters",
                v.len(),
                self.velocity.len()
            )));
        }
        self.velocity = v;
        Ok(())
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.velocity.len() || grads.len() != self.velocity.len() {
            return Err(Error::shape(format!(
                "{} params and {} grads for an optimizer over {}",
                params.len(),
                grads.len(),
                self.velocity.len()
            )));
        }
        for ((p, g), v) in params.iter_mut().zip(grads).zip(self.velocity.iter_mut()) {
            *v = self.momentum * *v - self.lr * (g + self.weight_decay * *p);
            *p += *v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_gradient_descent() {
        let mut opt = Sgd::new(0.1, 0.0, 0.0, 2);
        let mut p = vec![1.0, -1.0];
        opt.step(&mut p, &[2.0, 0.5]).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
        assert!((p[1] + 1.05).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut opt = Sgd::new(0.1, 0.9, 0.0, 1);
        let mut p = vec![3.0];
        opt.step(&mut p, &[0.0]).unwrap();
        assert_eq!(p, vec![3.0]);
    }

    #[test]
    fn two_momentum_steps() {
        // v1 = -lr g, p1 = p0 - lr g; v2 = -mu lr g - lr g, p2 = p0 - lr g (2 + mu).
        let (lr, mu, g) = (0.01, 0.9, 3.0);
        let mut opt = Sgd::new(lr, mu, 0.0, 1);
        let mut p = vec![1.0];
        opt.step(&mut p, &[g]).unwrap();
        opt.step(&mut p, &[g]).unwrap();
        assert!((p[0] - (1.0 - lr * g * (2.0 + mu))).abs() < 1e-15);
        assert!((opt.velocity()[0] + lr * g * (1.0 + mu)).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_pulls_to_zero() {
        let mut opt = Sgd::new(0.5, 0.0, 0.1, 1);
        let mut p = vec![2.0];
        opt.step(&mut p, &[0.0]).unwrap();
        assert!((p[0] - 1.9).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let mut opt = Sgd::new(0.1, 0.0, 0.0, 2);
        assert!(opt.step(&mut [1.0], &[1.0]).is_err());
        assert!(opt.set_velocity(vec![0.0]).is_err());
    }
}

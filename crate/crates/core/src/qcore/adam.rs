use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{MlpParams, QcoreError};
use crate::math;

/// Adam with bias correction. Moment buffers follow the parameter order of
/// [`MlpParams::iter`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    /// Applies one update. Nothing is touched if any gradient is non-finite.
    pub fn step(&mut self, p: &mut MlpParams, grads: &MlpParams) -> Result<(), QcoreError> {
        if !p.same_shape(grads) || self.m.len() != p.num_params() {
            return Err(QcoreError::Shape(
                "optimizer, params and grads disagree".into(),
            ));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(QcoreError::NonFiniteGradient(i));
        }
        self.t += 1;
        let t = self.t as f64;
        let c1 = 1.0 - math::pow(self.beta1, t);
        let c2 = 1.0 - math::pow(self.beta2, t);
        for (((w, &g), m), v) in p
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= self.lr * m_hat / (math::sqrt(v_hat) + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(w: f64) -> MlpParams {
        let mut p = MlpParams::zeros(&[1, 1]);
        p.layers[0].weights[0] = w;
        p
    }

    #[test]
    fn first_step_moves_by_lr() {
        // With bias correction the first step is lr · g / (|g| + eps).
        let mut p = scalar(1.0);
        let mut g = MlpParams::zeros(&[1, 1]);
        g.layers[0].weights[0] = 4.0;
        g.layers[0].bias[0] = -0.5;
        let mut opt = Adam::new(p.num_params(), 0.01);
        opt.step(&mut p, &g).unwrap();
        assert!((p.layers[0].weights[0] - (1.0 - 0.01 * 4.0 / (4.0 + 1e-8))).abs() < 1e-15);
        assert!((p.layers[0].bias[0] - 0.01 * 0.5 / (0.5 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_schedule() {
        // Constant g: m_hat = g and v_hat = g² exactly, so every step is lr·g/(|g|+eps).
        let mut p = scalar(0.0);
        let mut g = MlpParams::zeros(&[1, 1]);
        g.layers[0].weights[0] = 2.0;
        let mut opt = Adam::new(p.num_params(), 0.1);
        for k in 1..=5 {
            opt.step(&mut p, &g).unwrap();
            let expected = -0.1 * k as f64 * 2.0 / (2.0 + 1e-8);
            assert!((p.layers[0].weights[0] - expected).abs() < 1e-12);
        }
        assert_eq!(opt.t, 5);
    }

    #[test]
    fn non_finite_gradient_is_rejected_without_side_effects() {
        let mut p = scalar(1.5);
        let before = p.clone();
        let mut g = MlpParams::zeros(&[1, 1]);
        g.layers[0].bias[0] = f64::NAN;
        let mut opt = Adam::new(p.num_params(), 0.1);
        assert_eq!(opt.step(&mut p, &g), Err(QcoreError::NonFiniteGradient(1)));
        assert_eq!(p, before);
        assert_eq!(opt.t, 0);
        g.layers[0].bias[0] = f64::INFINITY;
        assert!(opt.step(&mut p, &g).is_err());
    }

    #[test]
    fn shape_mismatch() {
        let mut p = scalar(0.0);
        let g = MlpParams::zeros(&[2, 1]);
        assert!(Adam::new(2, 0.1).step(&mut p, &g).is_err());
    }
}

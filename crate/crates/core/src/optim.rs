//! Adam optimizer over a flat parameter vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T: Scalar> {
    pub config: AdamConfig,
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        Adam { config, m: vec![T::zero(); n_params], v: vec![T::zero(); n_params], step: 0 }
    }

    /// One bias-corrected update of `params` in place.
    pub fn update(&mut self, params: &mut [T], grads: &[T]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::WidthMismatch { expected: self.m.len(), got: params.len().min(grads.len()) });
        }
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        let step = T::of(c.learning_rate / bc1);
        let inv_bc2 = T::of(1.0 / bc2);
        let eps = T::of(c.epsilon);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            *p -= step * *m / ((*v * inv_bc2).sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut adam = Adam::<f64>::new(3, AdamConfig::default());
        let mut p = vec![1.0, -2.0, 3.0];
        adam.update(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = Adam::<f64>::new(4, AdamConfig::default());
        let g = [0.5, -3.0, 1e-3, -40.0];
        let mut p = vec![0.0; 4];
        adam.update(&mut p, &g).unwrap();
        for (pi, gi) in p.iter().zip(g) {
            // m̂ = g and v̂ = g², so the step is lr·g/(|g|+ε)
            let tol = (1e-3 * 1e-8 / (gi.abs() + 1e-8)) + 1e-15;
            assert!((pi + 1e-3 * gi.signum()).abs() <= tol, "{pi} {gi}");
        }
    }

    #[test]
    fn zero_learning_rate_is_inert() {
        let mut adam = Adam::<f32>::new(2, AdamConfig { learning_rate: 0.0, ..Default::default() });
        let mut p = vec![1.0f32, 2.0];
        for _ in 0..5 {
            adam.update(&mut p, &[0.3, -0.7]).unwrap();
        }
        assert_eq!(p, vec![1.0, 2.0]);
    }

    #[test]
    fn minimizes_a_parabola() {
        let mut adam = Adam::<f64>::new(1, AdamConfig { learning_rate: 0.1, ..Default::default() });
        let mut x = vec![1.0];
        let mut reached = None;
        for i in 0..500 {
            let g = [2.0 * x[0]];
            adam.update(&mut x, &g).unwrap();
            if x[0].abs() < 1e-2 {
                reached = Some(i);
                break;
            }
        }
        assert!(reached.is_some(), "x = {}", x[0]);
    }

    #[test]
    fn shape_mismatch() {
        let mut adam = Adam::<f64>::new(2, AdamConfig::default());
        assert_eq!(adam.update(&mut [0.0; 3], &[0.0; 3]).unwrap_err().category(), "width-mismatch");
    }
}

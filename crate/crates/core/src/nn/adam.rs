use serde::{Deserialize, Serialize};

use super::{NnError, Parameters, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam with bias-corrected moments. State is allocated lazily on the
/// first step to match the parameter layout.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Adam { config, step: 0, m: Vec::new(), v: Vec::new() }
    }

    /// One update. Every gradient is checked before any parameter moves,
    /// so a non-finite gradient leaves model and state untouched.
    pub fn update<P: Parameters<T>>(&mut self, params: &mut P, grads: &P, lr: f64) -> Result<(), NnError> {
        let grads = grads.tensors();
        for g in &grads {
            if g.data.iter().any(|v| !v.is_finite()) {
                return Err(NnError::NonFiniteGradient { tensor: g.name.clone() });
            }
        }
        let mut params = params.tensors_mut();
        if params.len() != grads.len() {
            return Err(NnError::ShapeMismatch { expected: vec![params.len()], found: vec![grads.len()] });
        }
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![T::zero(); g.data.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let (b1, b2) = (T::from_f64(c.beta1), T::from_f64(c.beta2));
        let (one_b1, one_b2) = (T::from_f64(1.0 - c.beta1), T::from_f64(1.0 - c.beta2));
        let bc1 = T::from_f64(1.0 - c.beta1.powi(t));
        let bc2 = T::from_f64(1.0 - c.beta2.powi(t));
        let (lr, eps) = (T::from_f64(lr), T::from_f64(c.eps));
        for (i, (p, g)) in params.iter_mut().zip(&grads).enumerate() {
            if p.data.len() != g.data.len() {
                return Err(NnError::ShapeMismatch { expected: vec![p.data.len()], found: vec![g.data.len()] });
            }
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..g.data.len() {
                let gj = g.data[j];
                m[j] = b1 * m[j] + one_b1 * gj;
                v[j] = b2 * v[j] + one_b2 * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p.data[j] = p.data[j] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

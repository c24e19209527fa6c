use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::Dense;
use super::tensor::{relu_backward_inplace, relu_inplace, Matrix, Scalar};
use super::{NnError, Parameters, TensorMut, TensorRef};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleTowerConfig {
    /// Layer widths from input to output, e.g. `[34, 128, 512, 768, 1024]`.
    pub dims: Vec<usize>,
    /// Index into `dims` of the hidden activation feeding the residual
    /// projection onto the output.
    pub residual_from: usize,
}

impl Default for StyleTowerConfig {
    fn default() -> Self {
        StyleTowerConfig { dims: vec![34, 128, 512, 768, 1024], residual_from: 2 }
    }
}

impl StyleTowerConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let n = self.dims.len();
        if n < 3 || self.residual_from == 0 || self.residual_from >= n - 1 || self.dims.contains(&0) {
            return Err(NnError::InvalidConfig(format!(
                "style tower needs ≥ 3 non-zero widths and a hidden residual source, got {:?} from {}",
                self.dims, self.residual_from
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        let layers: usize = self.dims.windows(2).map(|w| Dense::<f32>::param_count(w[0], w[1])).sum();
        layers + Dense::<f32>::param_count(self.dims[self.residual_from], self.output_dim())
    }
}

/// MLP with ReLU on every hidden layer and a learned residual projection
/// from one hidden activation added to the (linear) output.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleTower<T> {
    pub config: StyleTowerConfig,
    pub layers: Vec<Dense<T>>,
    pub residual: Dense<T>,
}

/// Post-activation outputs from a forward pass; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct StyleCache<T> {
    pub acts: Vec<Matrix<T>>,
}

impl<T: Scalar> StyleTower<T> {
    pub fn zeros(config: StyleTowerConfig) -> Result<Self, NnError> {
        config.validate()?;
        let layers = config.dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        let residual = Dense::zeros(config.dims[config.residual_from], config.output_dim());
        Ok(StyleTower { config, layers, residual })
    }

    pub fn init(config: StyleTowerConfig, seed: u64) -> Result<Self, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with(config, &mut rng)
    }

    pub fn init_with(config: StyleTowerConfig, rng: &mut ChaCha8Rng) -> Result<Self, NnError> {
        config.validate()?;
        let layers = config.dims.windows(2).map(|w| Dense::kaiming(w[0], w[1], rng)).collect();
        let residual = Dense::kaiming(config.dims[config.residual_from], config.output_dim(), rng);
        Ok(StyleTower { config, layers, residual })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config.clone()).expect("config already validated")
    }

    pub fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>, NnError> {
        self.forward_cached(x).map(|(out, _)| out)
    }

    /// Embed one vector.
    pub fn forward_one(&self, s: &[T]) -> Result<Vec<T>, NnError> {
        let x = Matrix::from_vec(1, s.len(), s.to_vec());
        Ok(self.forward(&x)?.data)
    }

    pub fn forward_cached(&self, x: &Matrix<T>) -> Result<(Matrix<T>, StyleCache<T>), NnError> {
        if x.cols != self.config.input_dim() {
            return Err(NnError::DimensionMismatch { expected: self.config.input_dim(), found: x.cols });
        }
        let last = self.layers.len() - 1;
        let mut acts = vec![x.clone()];
        for layer in &self.layers[..last] {
            let mut h = layer.forward(acts.last().unwrap());
            relu_inplace(&mut h);
            acts.push(h);
        }
        let mut out = self.layers[last].forward(acts.last().unwrap());
        let res = self.residual.forward(&acts[self.config.residual_from]);
        for (o, r) in out.data.iter_mut().zip(&res.data) {
            *o = *o + *r;
        }
        Ok((out, StyleCache { acts }))
    }

    /// Parameter gradients for upstream gradient `d_out`, plus the gradient
    /// with respect to the input.
    pub fn backward(&self, cache: &StyleCache<T>, d_out: &Matrix<T>) -> Result<(Self, Matrix<T>), NnError> {
        let batch = cache.acts[0].rows;
        if d_out.shape() != (batch, self.config.output_dim()) {
            return Err(NnError::ShapeMismatch {
                expected: vec![batch, self.config.output_dim()],
                found: vec![d_out.rows, d_out.cols],
            });
        }
        let mut grads = self.zeros_like();
        let last = self.layers.len() - 1;
        let r = self.config.residual_from;
        let mut d_res = self.residual.backward(&cache.acts[r], d_out, &mut grads.residual, true);
        let mut da = self.layers[last]
            .backward(&cache.acts[last], d_out, &mut grads.layers[last], true)
            .expect("input gradient requested");
        for k in (0..last).rev() {
            // `da` is the gradient w.r.t. acts[k + 1]
            if k + 1 == r {
                let extra = d_res.take().expect("residual gradient used once");
                for (a, e) in da.data.iter_mut().zip(&extra.data) {
                    *a = *a + *e;
                }
            }
            relu_backward_inplace(&mut da, &cache.acts[k + 1]);
            da = self.layers[k].backward(&cache.acts[k], &da, &mut grads.layers[k], true).expect("input gradient requested");
        }
        Ok((grads, da))
    }

    pub fn cast<U: Scalar>(&self) -> StyleTower<U> {
        StyleTower {
            config: self.config.clone(),
            layers: self.layers.iter().map(Dense::cast).collect(),
            residual: self.residual.cast(),
        }
    }
}

impl<T: Scalar> Parameters<T> for StyleTower<T> {
    fn tensors(&self) -> Vec<TensorRef<'_, T>> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push(TensorRef { name: format!("style.layer{i}.w"), shape: vec![l.w.rows, l.w.cols], data: &l.w.data });
            out.push(TensorRef { name: format!("style.layer{i}.b"), shape: vec![l.b.len()], data: &l.b });
        }
        let r = &self.residual;
        out.push(TensorRef { name: "style.residual.w".into(), shape: vec![r.w.rows, r.w.cols], data: &r.w.data });
        out.push(TensorRef { name: "style.residual.b".into(), shape: vec![r.b.len()], data: &r.b });
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_, T>> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter_mut().enumerate() {
            out.push(TensorMut { name: format!("style.layer{i}.w"), data: &mut l.w.data });
            out.push(TensorMut { name: format!("style.layer{i}.b"), data: &mut l.b });
        }
        out.push(TensorMut { name: "style.residual.w".into(), data: &mut self.residual.w.data });
        out.push(TensorMut { name: "style.residual.b".into(), data: &mut self.residual.b });
        out
    }
}

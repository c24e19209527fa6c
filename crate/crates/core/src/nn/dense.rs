use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{accumulate_weight_grad, affine, matmul_transposed, Matrix, Scalar};

/// Fully connected layer with weights stored `[in × out]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense<T> {
    pub w: Matrix<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense { w: Matrix::zeros(input, output), b: vec![T::zero(); output] }
    }

    /// Uniform fan-in scaling, `±sqrt(6 / fan_in)`, zero bias.
    pub fn kaiming<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        let bound = (6.0 / input as f64).sqrt();
        let data = (0..input * output).map(|_| T::from_f64(rng.gen_range(-bound..bound))).collect();
        Dense { w: Matrix::from_vec(input, output, data), b: vec![T::zero(); output] }
    }

    pub fn input_dim(&self) -> usize {
        self.w.rows
    }

    pub fn output_dim(&self) -> usize {
        self.w.cols
    }

    pub fn param_count(input: usize, output: usize) -> usize {
        input * output + output
    }

    pub fn forward(&self, x: &Matrix<T>) -> Matrix<T> {
        affine(x, &self.w, &self.b)
    }

    /// Accumulate this layer's parameter gradients into `grad` and return
    /// the gradient with respect to the input when asked for.
    pub fn backward(&self, x: &Matrix<T>, dy: &Matrix<T>, grad: &mut Dense<T>, want_input: bool) -> Option<Matrix<T>> {
        accumulate_weight_grad(x, dy, &mut grad.w, &mut grad.b);
        want_input.then(|| matmul_transposed(dy, &self.w))
    }

    pub fn cast<U: Scalar>(&self) -> Dense<U> {
        Dense { w: self.w.cast(), b: self.b.iter().map(|v| U::from_f64(v.as_f64())).collect() }
    }
}

//! Row-major matrices and the handful of kernels the towers need.
//!
//! Every reduction runs in a fixed order, so results are bit-identical
//! across runs and machines for the same inputs.

use std::fmt::Debug;

use num_traits::Float;
use serde::{Deserialize, Serialize};

pub trait Scalar: Float + Default + Debug + Send + Sync + 'static {
    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect() }
    }

    pub fn map_inplace(&mut self, f: impl Fn(T) -> T) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }
}

/// `y += a·x`, elementwise.
#[inline]
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * *xi;
    }
}

/// Dot product with eight interleaved accumulators combined in a fixed tree.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail = tail + *x * *y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `x[B×in] · w[in×out] + bias`.
pub fn affine<T: Scalar>(x: &Matrix<T>, w: &Matrix<T>, bias: &[T]) -> Matrix<T> {
    assert_eq!(x.cols, w.rows, "affine inner dimension");
    let mut out = Matrix::zeros(x.rows, w.cols);
    for r in 0..x.rows {
        let y = out.row_mut(r);
        y.copy_from_slice(bias);
        for (i, &xi) in x.row(r).iter().enumerate() {
            if xi != T::zero() {
                axpy(xi, w.row(i), y);
            }
        }
    }
    out
}

/// `dy[B×out] · w[in×out]ᵀ`.
pub fn matmul_transposed<T: Scalar>(dy: &Matrix<T>, w: &Matrix<T>) -> Matrix<T> {
    assert_eq!(dy.cols, w.cols, "transposed product dimension");
    let mut out = Matrix::zeros(dy.rows, w.rows);
    for r in 0..dy.rows {
        let g = dy.row(r);
        for (i, o) in out.row_mut(r).iter_mut().enumerate() {
            *o = dot(g, w.row(i));
        }
    }
    out
}

/// Accumulate `xᵀ · dy` into `dw` and column sums of `dy` into `db`.
pub fn accumulate_weight_grad<T: Scalar>(x: &Matrix<T>, dy: &Matrix<T>, dw: &mut Matrix<T>, db: &mut [T]) {
    assert_eq!((x.rows, x.cols, dy.cols), (dy.rows, dw.rows, dw.cols), "weight gradient shapes");
    for r in 0..x.rows {
        let g = dy.row(r);
        for (i, &xi) in x.row(r).iter().enumerate() {
            if xi != T::zero() {
                axpy(xi, g, dw.row_mut(i));
            }
        }
        axpy(T::one(), g, db);
    }
}

pub fn relu_inplace<T: Scalar>(m: &mut Matrix<T>) {
    m.map_inplace(|v| if v > T::zero() { v } else { T::zero() });
}

/// Zero the gradient wherever the forward activation was clipped.
pub fn relu_backward_inplace<T: Scalar>(grad: &mut Matrix<T>, activated: &Matrix<T>) {
    for (g, a) in grad.data.iter_mut().zip(&activated.data) {
        if *a <= T::zero() {
            *g = T::zero();
        }
    }
}

//! InfoNCE over cosine similarities with in-batch negatives.

use crate::nn::tensor::dot;
use crate::nn::{Matrix, Scalar};

use super::ContrastiveError;

/// Allowed deviation of a row norm from 1 on normalized inputs.
pub const NORM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct NceOutput<T> {
    pub loss: T,
    pub d_anchor: Matrix<T>,
    pub d_positive: Matrix<T>,
}

fn check_shapes<T: Scalar>(a: &Matrix<T>, p: &Matrix<T>, tau: f64) -> Result<(), ContrastiveError> {
    if a.shape() != p.shape() {
        return Err(ContrastiveError::ShapeMismatch { anchor: a.shape(), positive: p.shape() });
    }
    if a.rows < 2 {
        return Err(ContrastiveError::BatchTooSmall(a.rows));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(ContrastiveError::InvalidTemperature(tau));
    }
    Ok(())
}

fn check_normalized<T: Scalar>(m: &Matrix<T>, side: &'static str) -> Result<(), ContrastiveError> {
    for r in 0..m.rows {
        let norm = dot(m.row(r), m.row(r)).as_f64().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE || !norm.is_finite() {
            return Err(ContrastiveError::UnnormalizedInput { side, row: r, norm });
        }
    }
    Ok(())
}

/// Loss on L2-normalized rows; row `i` of `anchors` matches row `i` of
/// `positives` and every other row is a negative.
pub fn info_nce<T: Scalar>(anchors: &Matrix<T>, positives: &Matrix<T>, tau: f64, symmetric: bool) -> Result<T, ContrastiveError> {
    Ok(info_nce_with_grad(anchors, positives, tau, symmetric)?.loss)
}

/// Loss and gradients with respect to the normalized inputs.
pub fn info_nce_with_grad<T: Scalar>(
    anchors: &Matrix<T>,
    positives: &Matrix<T>,
    tau: f64,
    symmetric: bool,
) -> Result<NceOutput<T>, ContrastiveError> {
    check_shapes(anchors, positives, tau)?;
    check_normalized(anchors, "anchor")?;
    check_normalized(positives, "positive")?;
    Ok(nce_core(anchors, positives, tau, symmetric))
}

/// Normalizes the raw embeddings itself and carries the gradient back
/// through the normalization, so callers hand in tower outputs directly.
pub fn info_nce_raw<T: Scalar>(
    anchors: &Matrix<T>,
    positives: &Matrix<T>,
    tau: f64,
    symmetric: bool,
) -> Result<NceOutput<T>, ContrastiveError> {
    check_shapes(anchors, positives, tau)?;
    let (na, norms_a) = normalize_rows(anchors);
    let (np, norms_p) = normalize_rows(positives);
    let mut out = nce_core(&na, &np, tau, symmetric);
    out.d_anchor = normalize_backward(&na, &norms_a, &out.d_anchor);
    out.d_positive = normalize_backward(&np, &norms_p, &out.d_positive);
    Ok(out)
}

fn normalize_rows<T: Scalar>(m: &Matrix<T>) -> (Matrix<T>, Vec<T>) {
    let floor = T::from_f64(1e-12);
    let mut out = m.clone();
    let mut norms = Vec::with_capacity(m.rows);
    for r in 0..m.rows {
        let n = dot(m.row(r), m.row(r)).sqrt().max(floor);
        for v in out.row_mut(r) {
            *v = *v / n;
        }
        norms.push(n);
    }
    (out, norms)
}

/// For `y = x/‖x‖`: `dx = (dy − y·(y·dy)) / ‖x‖`.
fn normalize_backward<T: Scalar>(y: &Matrix<T>, norms: &[T], dy: &Matrix<T>) -> Matrix<T> {
    let mut dx = Matrix::zeros(y.rows, y.cols);
    for (r, &norm) in norms.iter().enumerate() {
        let (yr, gr) = (y.row(r), dy.row(r));
        let proj = dot(yr, gr);
        for ((d, &yv), &gv) in dx.row_mut(r).iter_mut().zip(yr).zip(gr) {
            *d = (gv - yv * proj) / norm;
        }
    }
    dx
}

/// Row-wise softmax cross-entropy against the diagonal. Returns the mean
/// loss and `∂loss/∂logits` scaled by `weight`.
fn diagonal_xent<T: Scalar>(logits: &Matrix<T>, weight: T) -> (T, Matrix<T>) {
    let b = logits.rows;
    let scale = weight / T::from_f64(b as f64);
    let mut total = T::zero();
    let mut grad = Matrix::zeros(b, b);
    for i in 0..b {
        let row = logits.row(i);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&l| (l - max).exp()).collect();
        let sum = exps.iter().copied().fold(T::zero(), |a, e| a + e);
        total = total + (sum.ln() + max - row[i]);
        for (j, g) in grad.row_mut(i).iter_mut().enumerate() {
            let delta = if i == j { T::one() } else { T::zero() };
            *g = (exps[j] / sum - delta) * scale;
        }
    }
    (total / T::from_f64(b as f64), grad)
}

fn nce_core<T: Scalar>(a: &Matrix<T>, p: &Matrix<T>, tau: f64, symmetric: bool) -> NceOutput<T> {
    let b = a.rows;
    let inv_tau = T::from_f64(1.0 / tau);
    let mut logits = Matrix::zeros(b, b);
    for i in 0..b {
        for j in 0..b {
            logits.data[i * b + j] = dot(a.row(i), p.row(j)) * inv_tau;
        }
    }
    let weight = if symmetric { T::from_f64(0.5) } else { T::one() };
    let (mut loss, mut d_logits) = diagonal_xent(&logits, weight);
    if symmetric {
        let t = transpose(&logits);
        let (l2, g2) = diagonal_xent(&t, weight);
        loss = (loss + l2) * weight;
        let g2 = transpose(&g2);
        for (d, g) in d_logits.data.iter_mut().zip(&g2.data) {
            *d = *d + *g;
        }
    }
    // logits = A·Pᵀ/τ
    let mut d_anchor = Matrix::zeros(b, a.cols);
    let mut d_positive = Matrix::zeros(b, a.cols);
    for i in 0..b {
        for j in 0..b {
            let g = d_logits.data[i * b + j] * inv_tau;
            if g != T::zero() {
                crate::nn::tensor::axpy(g, p.row(j), d_anchor.row_mut(i));
                crate::nn::tensor::axpy(g, a.row(i), d_positive.row_mut(j));
            }
        }
    }
    NceOutput { loss, d_anchor, d_positive }
}

fn transpose<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    let mut t = Matrix::zeros(m.cols, m.rows);
    for r in 0..m.rows {
        for c in 0..m.cols {
            t.data[c * m.rows + r] = m.data[r * m.cols + c];
        }
    }
    t
}

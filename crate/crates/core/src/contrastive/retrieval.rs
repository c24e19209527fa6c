use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::tensor::dot;
use crate::nn::{l2_normalize, EncoderModel, Matrix};
use crate::style::STYLE_DIM;

use super::pairs::ContrastivePair;
use super::trainer::PreparedPair;
use super::ContrastiveError;

/// Normalized code embeddings of anchors and style embeddings of
/// positives, row-aligned with `pairs`.
pub fn embed_pairs(model: &EncoderModel<f32>, pairs: &[PreparedPair]) -> Result<(Matrix<f32>, Matrix<f32>), ContrastiveError> {
    let dim = model.embedding_dim();
    let mut anchors = Matrix::zeros(pairs.len(), dim);
    let mut positives = Matrix::zeros(pairs.len(), dim);
    for (c, chunk) in pairs.chunks(64).enumerate() {
        let inputs: Vec<_> = chunk.iter().map(|p| p.code.clone()).collect();
        let styles = Matrix::from_vec(chunk.len(), STYLE_DIM, chunk.iter().flat_map(|p| p.style).collect());
        let (code, _) = model.code.forward_cached(&inputs)?;
        let style = model.style.forward(&styles)?;
        for r in 0..chunk.len() {
            let row = c * 64 + r;
            anchors.row_mut(row).copy_from_slice(&l2_normalize(code.row(r)));
            positives.row_mut(row).copy_from_slice(&l2_normalize(style.row(r)));
        }
    }
    Ok((anchors, positives))
}

/// 0-based rank of positive `i` for anchor `i`: candidates scoring higher,
/// or equal with a smaller id, rank ahead.
pub fn rank_of_positive(anchors: &Matrix<f32>, positives: &Matrix<f32>, ids: &[String], i: usize) -> usize {
    let a = anchors.row(i);
    let own = dot(a, positives.row(i));
    (0..positives.rows)
        .filter(|&j| j != i)
        .filter(|&j| {
            let s = dot(a, positives.row(j));
            s > own || (s == own && ids[j] < ids[i])
        })
        .count()
}

pub fn recall_at_k(anchors: &Matrix<f32>, positives: &Matrix<f32>, ids: &[String], k: usize) -> Result<f64, ContrastiveError> {
    Ok(recall_curve(anchors, positives, ids, &[k])?[0].1)
}

/// Recall at each requested cutoff from one ranking pass.
pub fn recall_curve(
    anchors: &Matrix<f32>,
    positives: &Matrix<f32>,
    ids: &[String],
    ks: &[usize],
) -> Result<Vec<(usize, f64)>, ContrastiveError> {
    let n = anchors.rows;
    if n == 0 {
        return Err(ContrastiveError::EmptyHeldout);
    }
    if positives.shape() != anchors.shape() || ids.len() != n {
        return Err(ContrastiveError::ShapeMismatch { anchor: anchors.shape(), positive: positives.shape() });
    }
    let ranks: Vec<usize> = (0..n).map(|i| rank_of_positive(anchors, positives, ids, i)).collect();
    Ok(ks.iter().map(|&k| (k, ranks.iter().filter(|&&r| r < k).count() as f64 / n as f64)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub n: usize,
    pub recall: Vec<(usize, f64)>,
    pub mean_rank: f64,
}

pub fn eval_retrieval(
    model: &EncoderModel<f32>,
    heldout: &[PreparedPair],
    ks: &[usize],
) -> Result<RetrievalReport, ContrastiveError> {
    if heldout.is_empty() {
        return Err(ContrastiveError::EmptyHeldout);
    }
    let (a, p) = embed_pairs(model, heldout)?;
    let ids: Vec<String> = heldout.iter().map(|h| h.id.clone()).collect();
    let recall = recall_curve(&a, &p, &ids, ks)?;
    let mean_rank = (0..a.rows).map(|i| rank_of_positive(&a, &p, &ids, i) as f64 + 1.0).sum::<f64>() / a.rows as f64;
    Ok(RetrievalReport { n: a.rows, recall, mean_rank })
}

/// Split pairs by file: a seeded `heldout_fraction` of files goes to the
/// held-out side, which keeps only each file's first pair.
pub fn split_by_file(
    pairs: &[ContrastivePair],
    heldout_fraction: f64,
    seed: u64,
) -> (Vec<ContrastivePair>, Vec<ContrastivePair>) {
    let mut by_file: BTreeMap<&str, Vec<&ContrastivePair>> = BTreeMap::new();
    for p in pairs {
        by_file.entry(p.file_id.as_str()).or_default().push(p);
    }
    let mut files: Vec<&str> = by_file.keys().copied().collect();
    files.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_held = (heldout_fraction.clamp(0.0, 1.0) * files.len() as f64 + 1e-9).floor() as usize;
    let held: std::collections::HashSet<&str> = files[..n_held].iter().copied().collect();
    let mut train = Vec::new();
    let mut heldout = Vec::new();
    for p in pairs {
        if !held.contains(p.file_id.as_str()) {
            train.push(p.clone());
        } else if std::ptr::eq(by_file[p.file_id.as_str()][0], p) {
            heldout.push(p.clone());
        }
    }
    (train, heldout)
}

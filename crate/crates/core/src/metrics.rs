//! Style similarity, style loss, and n-gram overlap scores.
//!
//! BLEU and ROUGE run over lexer tokens (comments kept, layout dropped),
//! so they ignore whitespace layout entirely.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexloc::{lex_lenient, ParseMode, TokenKind};
use crate::style::{analyze_with, registry::NAMING, Normalize, StyleError, StyleVector, STYLE_DIM};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("style vector schemas differ: `{left}` vs `{right}`")]
    SchemaMismatch { left: String, right: String },
    #[error("{0} has no tokens")]
    EmptyInput(&'static str),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("lambda must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error(transparent)]
    Style(#[from] StyleError),
}

/// Mean absolute agreement over the 14 naming features.
pub fn css(a: &StyleVector, b: &StyleVector) -> Result<f64, MetricError> {
    if a.schema != b.schema {
        return Err(MetricError::SchemaMismatch { left: a.schema.clone(), right: b.schema.clone() });
    }
    let l1: f64 = a.values[NAMING].iter().zip(&b.values[NAMING]).map(|(x, y)| (x - y).abs()).sum();
    Ok(1.0 - l1 / NAMING.len() as f64)
}

/// MSE between two normalized vectors over all 34 slots.
pub fn style_mse(a: &StyleVector, b: &StyleVector) -> Result<f64, MetricError> {
    if a.schema != b.schema {
        return Err(MetricError::SchemaMismatch { left: a.schema.clone(), right: b.schema.clone() });
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / STYLE_DIM as f64)
}

pub fn style_loss(candidate_source: &str, target: &StyleVector) -> Result<f64, MetricError> {
    style_loss_with(candidate_source, target, ParseMode::Strict)
}

pub fn style_loss_with(candidate_source: &str, target: &StyleVector, mode: ParseMode) -> Result<f64, MetricError> {
    let candidate = analyze_with(candidate_source, mode)?.raw.normalize();
    style_mse(&candidate, target)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { lambda: 0.1 }
    }
}

impl LossConfig {
    pub fn new(lambda: f64) -> Result<Self, MetricError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(MetricError::InvalidLambda(lambda));
        }
        Ok(LossConfig { lambda })
    }
}

/// `ce + λ·style`; the cross-entropy term comes from an external generator.
pub fn total_loss(ce: f64, style: f64, cfg: &LossConfig) -> Result<f64, MetricError> {
    if !ce.is_finite() {
        return Err(MetricError::NonFinite("cross-entropy"));
    }
    if !style.is_finite() {
        return Err(MetricError::NonFinite("style loss"));
    }
    let cfg = LossConfig::new(cfg.lambda)?;
    Ok(ce + cfg.lambda * style)
}

/// Token texts used by BLEU/ROUGE.
pub fn metric_tokens(source: &str) -> Vec<String> {
    lex_lenient(&crate::lexloc::normalize_newlines(source))
        .into_iter()
        .filter(|t| !t.kind.is_layout() && !(t.kind == TokenKind::Punct && t.text == "\\"))
        .map(|t| t.text)
        .collect()
}

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(|t| t.as_ref()).collect()).or_insert(0) += 1;
        }
    }
    counts
}

fn overlap(cand: &HashMap<Vec<&str>, usize>, refr: &HashMap<Vec<&str>, usize>) -> usize {
    cand.iter().map(|(g, c)| (*c).min(refr.get(g).copied().unwrap_or(0))).sum()
}

pub fn bleu4(candidate: &str, reference: &str) -> Result<f64, MetricError> {
    bleu4_tokens(&metric_tokens(candidate), &metric_tokens(reference))
}

/// Sentence BLEU over orders `1..=min(4, |candidate|)`. A zero match
/// count at order ≥ 2 is smoothed to `1 / (2·candidate_ngrams)`.
pub fn bleu4_tokens<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> Result<f64, MetricError> {
    check_nonempty(candidate.len(), reference.len())?;
    let orders = candidate.len().min(4);
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let cand = ngram_counts(candidate, n);
        let total = candidate.len() + 1 - n;
        let matched = overlap(&cand, &ngram_counts(reference, n));
        let p = match (matched, n) {
            (0, 1) => return Ok(0.0),
            (0, _) => 1.0 / (2.0 * total as f64),
            (m, _) => m as f64 / total as f64,
        };
        log_sum += p.ln();
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    Ok((bp * (log_sum / orders as f64).exp()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(hit: usize, cand: usize, refr: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (precision, recall) = (ratio(hit, cand), ratio(hit, refr));
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Prf { precision, recall, f1 }
    }

    fn perfect() -> Self {
        Prf { precision: 1.0, recall: 1.0, f1: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RougeVariant {
    R1,
    R2,
    RL,
}

pub fn rouge(candidate: &str, reference: &str, variant: RougeVariant) -> Result<Prf, MetricError> {
    rouge_tokens(&metric_tokens(candidate), &metric_tokens(reference), variant)
}

pub fn rouge_tokens<T: AsRef<str>>(candidate: &[T], reference: &[T], variant: RougeVariant) -> Result<Prf, MetricError> {
    check_nonempty(candidate.len(), reference.len())?;
    let n = match variant {
        RougeVariant::R1 => 1,
        RougeVariant::R2 => 2,
        RougeVariant::RL => {
            let l = lcs_len(candidate, reference);
            return Ok(Prf::from_counts(l, candidate.len(), reference.len()));
        }
    };
    let cand_total = candidate.len().saturating_sub(n - 1);
    let ref_total = reference.len().saturating_sub(n - 1);
    if cand_total == 0 && ref_total == 0 {
        // too short for any n-gram: only exact equality scores
        let same = candidate.iter().map(AsRef::as_ref).eq(reference.iter().map(AsRef::as_ref));
        return Ok(if same { Prf::perfect() } else { Prf::from_counts(0, 0, 0) });
    }
    let hit = overlap(&ngram_counts(candidate, n), &ngram_counts(reference, n));
    Ok(Prf::from_counts(hit, cand_total, ref_total))
}

/// Longest common subsequence length, O(|a|·|b|) time, O(|b|) space.
pub fn lcs_len<T: AsRef<str>>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x.as_ref() == y.as_ref() { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

fn check_nonempty(cand: usize, refr: usize) -> Result<(), MetricError> {
    if cand == 0 {
        return Err(MetricError::EmptyInput("candidate"));
    }
    if refr == 0 {
        return Err(MetricError::EmptyInput("reference"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub css: f64,
    pub bleu4: f64,
    pub rouge1: Prf,
    pub rouge2: Prf,
    #[serde(rename = "rougeL")]
    pub rouge_l: Prf,
    pub style_loss: f64,
}

impl MetricReport {
    /// Score a candidate against a reference; the style target is the
    /// reference's own normalized vector unless one is given.
    pub fn compute(candidate: &str, reference: &str, target: Option<&StyleVector>, mode: ParseMode) -> Result<Self, MetricError> {
        let cand_vec = analyze_with(candidate, mode)?.raw.normalize();
        let ref_vec = analyze_with(reference, mode)?.raw.normalize();
        let (c, r) = (metric_tokens(candidate), metric_tokens(reference));
        Ok(MetricReport {
            css: css(&cand_vec, &ref_vec)?,
            bleu4: bleu4_tokens(&c, &r)?,
            rouge1: rouge_tokens(&c, &r, RougeVariant::R1)?,
            rouge2: rouge_tokens(&c, &r, RougeVariant::R2)?,
            rouge_l: rouge_tokens(&c, &r, RougeVariant::RL)?,
            style_loss: style_mse(&cand_vec, target.unwrap_or(&ref_vec))?,
        })
    }

    pub const CSV_HEADER: &'static str =
        "css,bleu4,rouge1_p,rouge1_r,rouge1_f1,rouge2_p,rouge2_r,rouge2_f1,rougeL_p,rougeL_r,rougeL_f1,style_loss";

    pub fn csv_row(&self) -> String {
        let mut v = vec![self.css, self.bleu4];
        for p in [self.rouge1, self.rouge2, self.rouge_l] {
            v.extend([p.precision, p.recall, p.f1]);
        }
        v.push(self.style_loss);
        crate::style::csv_row(&v)
    }
}

//! Structural feature block: per-function means plus file-level ratios.

use std::collections::HashMap;

use crate::lexloc::{body_span, has_docstring, BodyStats, ExceptKind, FunctionInfo, LineProfile, Stmt};

/// Per-function counts entering the means. A file without `def` is
/// summarized as one pseudo-function over its top-level statements.
#[derive(Debug, Clone, Default)]
pub struct FunctionRecord {
    pub call_depth: usize,
    pub branches: usize,
    pub returns: usize,
    pub args: usize,
    pub annotated_args: usize,
    pub length: usize,
    pub has_docstring: bool,
    pub has_try: bool,
    pub except_clauses: Vec<ExceptKind>,
    pub controls: usize,
}

impl From<&FunctionInfo> for FunctionRecord {
    fn from(f: &FunctionInfo) -> Self {
        let params = f.counted_params();
        FunctionRecord {
            call_depth: f.max_call_depth,
            branches: f.branch_count,
            returns: f.return_count,
            args: params.len(),
            annotated_args: params.iter().filter(|p| p.has_annotation).count(),
            length: f.body_line_span,
            has_docstring: f.has_docstring,
            has_try: f.has_try,
            except_clauses: f.except_clauses.clone(),
            controls: f.control_count,
        }
    }
}

impl FunctionRecord {
    pub fn module(stmts: &[Stmt]) -> Self {
        let stats = BodyStats::of(stmts);
        FunctionRecord {
            call_depth: stats.max_call_depth,
            branches: stats.branch_count,
            returns: stats.return_count,
            args: 0,
            annotated_args: 0,
            length: body_span(stmts),
            has_docstring: has_docstring(stmts),
            has_try: stats.has_try,
            except_clauses: stats.except_clauses,
            controls: stats.control_count,
        }
    }
}

/// Extra occurrences of repeated code lines ÷ code lines. Code lines are
/// non-blank and not comment-only; comparison ignores whitespace runs.
pub fn redundancy_ratio(lines: &[&str], profile: &LineProfile) -> f64 {
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut code = 0usize;
    for (line, info) in lines.iter().zip(&profile.lines) {
        if info.is_blank || info.is_comment_only {
            continue;
        }
        code += 1;
        let norm = line.split_whitespace().collect::<Vec<_>>().join(" ");
        *counts.entry(norm).or_default() += 1;
    }
    if code == 0 {
        return 0.0;
    }
    let extra: usize = counts.values().map(|c| c - 1).sum();
    extra as f64 / code as f64
}

pub fn structural_features(records: &[FunctionRecord], redundancy: f64) -> [f64; 11] {
    if records.is_empty() {
        let mut out = [0.0; 11];
        out[8] = redundancy;
        return out;
    }
    let n = records.len() as f64;
    let mean = |f: &dyn Fn(&FunctionRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    let clauses: Vec<ExceptKind> = records.iter().flat_map(|r| r.except_clauses.iter().copied()).collect();
    let specific = clauses.iter().filter(|k| **k == ExceptKind::Specific).count();
    let args: usize = records.iter().map(|r| r.args).sum();
    let annotated: usize = records.iter().map(|r| r.annotated_args).sum();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    [
        mean(&|r| r.call_depth as f64),
        mean(&|r| r.branches as f64),
        mean(&|r| r.returns as f64),
        mean(&|r| r.args as f64),
        mean(&|r| r.length as f64),
        mean(&|r| f64::from(u8::from(r.has_docstring))),
        mean(&|r| f64::from(u8::from(r.has_try))),
        ratio(specific, clauses.len()),
        redundancy,
        ratio(annotated, args),
        mean(&|r| r.controls as f64),
    ]
}

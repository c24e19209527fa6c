//! Layout feature block: blank lines, line lengths, indentation, spacing.

use std::collections::BTreeMap;

use crate::lexloc::{expanded_width, FunctionInfo, LineProfile, Token, TokenKind};

pub const PATTERN_ROWS: usize = 24;
pub const PATTERN_COLS: usize = 64;

/// Occupancy density of the first 24 lines × 64 columns after tab expansion.
pub fn space_pattern(source: &str) -> f64 {
    let source = crate::lexloc::normalize_newlines(source);
    let mut cells = 0usize;
    for line in crate::lexloc::split_lines(&source).into_iter().take(PATTERN_ROWS) {
        let mut col = 0usize;
        for c in line.chars() {
            if col >= PATTERN_COLS {
                break;
            }
            if c == '\t' {
                col += 4 - col % 4;
                continue;
            }
            if !c.is_whitespace() {
                cells += 1;
            }
            col += 1;
        }
    }
    cells as f64 / (PATTERN_ROWS * PATTERN_COLS) as f64
}

/// The 9 layout features. `source` must be newline-normalized and match
/// `profile` and `tokens`.
pub fn layout_features(source: &str, profile: &LineProfile, tokens: &[Token], functions: &[FunctionInfo]) -> [f64; 9] {
    let lines = crate::lexloc::split_lines(source);
    let total = profile.total_lines;
    let non_blank: Vec<_> = profile.non_blank().collect();
    let nb = non_blank.len() as f64;
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };

    let (avg, var, indent_avg) = if non_blank.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let avg = non_blank.iter().map(|l| l.raw_length as f64).sum::<f64>() / nb;
        let var = non_blank.iter().map(|l| (l.raw_length as f64 - avg).powi(2)).sum::<f64>() / nb;
        let ind = non_blank.iter().map(|l| l.indent_columns as f64 / 4.0).sum::<f64>() / nb;
        (avg, var, ind)
    };

    let comment_lines = profile.lines.iter().filter(|l| l.is_comment_only || l.has_inline_comment).count();
    let annotated = functions.iter().filter(|f| f.has_return_annotation).count();

    [
        ratio(total - non_blank.len(), total),
        avg,
        var,
        indent_avg,
        space_before_operator(&lines, tokens),
        ratio(comment_lines, non_blank.len()),
        ratio(annotated, functions.len()),
        indentation_consistency(profile, tokens),
        space_pattern(source),
    ]
}

/// Share of binary operators with a space or tab right before them.
/// An operator is binary when the previous token on the same logical
/// line ends an operand.
fn space_before_operator(lines: &[&str], tokens: &[Token]) -> f64 {
    let (mut binary, mut spaced) = (0usize, 0usize);
    let mut prev: Option<&Token> = None;
    for t in tokens {
        match t.kind {
            TokenKind::Newline => {
                prev = None;
                continue;
            }
            TokenKind::Indent | TokenKind::Dedent | TokenKind::Comment => continue,
            TokenKind::Punct if t.text == "\\" => continue,
            TokenKind::Operator if t.text != "~" && prev.is_some_and(Token::ends_operand) => {
                binary += 1;
                let before = t.col.checked_sub(1).and_then(|c| lines.get(t.line - 1).and_then(|l| l.chars().nth(c)));
                if matches!(before, Some(' ' | '\t')) {
                    spaced += 1;
                }
            }
            _ => {}
        }
        prev = Some(t);
    }
    if binary == 0 {
        0.0
    } else {
        spaced as f64 / binary as f64
    }
}

/// Modal indent increment, preferring increments that follow a block
/// header; ties go to the smaller unit.
fn indent_unit(profile: &LineProfile, tokens: &[Token]) -> Option<usize> {
    let mut stack = vec![0usize];
    let mut header_incs = Vec::new();
    let mut all_incs = Vec::new();
    let mut last_code: Option<&Token> = None;
    for t in tokens {
        match t.kind {
            TokenKind::Indent => {
                let col = profile.line(t.line).map_or(0, |l| l.indent_columns);
                let inc = col.saturating_sub(*stack.last().unwrap());
                stack.push(col);
                if inc > 0 {
                    all_incs.push(inc);
                    if last_code.is_some_and(|p| p.is_punct(":")) {
                        header_incs.push(inc);
                    }
                }
            }
            TokenKind::Dedent => {
                if stack.len() > 1 {
                    stack.pop();
                }
            }
            TokenKind::Newline | TokenKind::Comment => {}
            _ => last_code = Some(t),
        }
    }
    let modal = |incs: &[usize]| {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for i in incs {
            *counts.entry(*i).or_default() += 1;
        }
        // on equal counts the smaller increment compares greater
        counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(k, _)| *k)
    };
    modal(&header_incs)
        .or_else(|| modal(&all_incs))
        .or_else(|| profile.non_blank().map(|l| l.indent_columns).filter(|c| *c > 0).min())
}

fn indentation_consistency(profile: &LineProfile, tokens: &[Token]) -> f64 {
    let indented: Vec<_> = profile.non_blank().filter(|l| l.indent_columns > 0).collect();
    if indented.is_empty() {
        return 1.0;
    }
    let Some(unit) = indent_unit(profile, tokens) else { return 1.0 };
    let ok = indented
        .iter()
        .filter(|l| {
            let single_kind = !(l.leading_ws.contains(' ') && l.leading_ws.contains('\t'));
            expanded_width(&l.leading_ws) % unit == 0 && single_kind
        })
        .count();
    ok as f64 / indented.len() as f64
}

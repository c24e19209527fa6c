//! Lexing and lightweight syntactic analysis of Python source.
//!
//! Everything downstream (style features, metric tokenization, corpus
//! length filtering) reads source through this module: a token stream,
//! a per-line profile, and per-function records.

mod lexer;
mod parser;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexer::{expanded_width, is_keyword, lex, lex_lenient, normalize_newlines, render, Token, TokenKind, KEYWORDS};
pub use parser::{
    body_span, call_depth, has_docstring, parse_statements, split_top_level, BodyStats, ExceptKind, FunctionInfo, Param,
    ParseMode, Stmt,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated string literal starting on line {line}")]
    UnterminatedString { line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("unsupported construct `{construct}` on line {line}")]
    SyntaxUnsupported { line: usize, construct: String },
}

/// One record per `def`, nested definitions included, in source order.
pub fn parse_functions(source: &str, mode: ParseMode) -> Result<Vec<FunctionInfo>, ParseError> {
    let tokens = lex(source)?;
    functions_from_tokens(&tokens, mode)
}

pub fn functions_from_tokens(tokens: &[Token], mode: ParseMode) -> Result<Vec<FunctionInfo>, ParseError> {
    let stmts = parse_statements(tokens, mode)?;
    let mut out = Vec::new();
    parser::collect_functions(&stmts, false, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineInfo {
    pub raw_length: usize,
    pub leading_ws: String,
    /// Leading whitespace width with tabs expanded to 4-column stops.
    pub indent_columns: usize,
    pub is_blank: bool,
    pub is_comment_only: bool,
    pub has_inline_comment: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineProfile {
    pub lines: Vec<LineInfo>,
    pub total_lines: usize,
}

impl LineProfile {
    pub fn non_blank(&self) -> impl Iterator<Item = &LineInfo> {
        self.lines.iter().filter(|l| !l.is_blank)
    }

    /// 1-based access.
    pub fn line(&self, n: usize) -> Option<&LineInfo> {
        n.checked_sub(1).and_then(|i| self.lines.get(i))
    }
}

/// Physical lines after newline normalization; a trailing newline does
/// not start another line.
pub fn split_lines(source: &str) -> Vec<&str> {
    if source.is_empty() {
        return Vec::new();
    }
    let body = source.strip_suffix('\n').unwrap_or(source);
    body.split('\n').collect()
}

pub fn line_profile(source: &str) -> LineProfile {
    let source = normalize_newlines(source);
    let tokens = lex_lenient(&source);
    line_profile_with_tokens(&source, &tokens)
}

/// `source` must already be newline-normalized and `tokens` must come from it.
pub fn line_profile_with_tokens(source: &str, tokens: &[Token]) -> LineProfile {
    let raw = split_lines(source);
    let mut lines: Vec<LineInfo> = raw
        .iter()
        .map(|line| {
            let ws: String = line.chars().take_while(|c| *c == ' ' || *c == '\t').collect();
            LineInfo {
                raw_length: line.chars().count(),
                indent_columns: expanded_width(&ws),
                is_blank: line.trim().is_empty(),
                leading_ws: ws,
                is_comment_only: false,
                has_inline_comment: false,
            }
        })
        .collect();
    for tok in tokens.iter().filter(|t| t.kind == TokenKind::Comment) {
        if let Some(info) = tok.line.checked_sub(1).and_then(|i| lines.get_mut(i)) {
            let first_code_col = raw[tok.line - 1].chars().take_while(|c| c.is_whitespace()).count();
            if tok.col == first_code_col {
                info.is_comment_only = true;
            } else {
                info.has_inline_comment = true;
            }
        }
    }
    LineProfile { total_lines: lines.len(), lines }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_counts_lines() {
        let p = line_profile("a=1\n\nb=2");
        assert_eq!(p.total_lines, 3);
        assert!(p.lines[1].is_blank);
        assert_eq!(line_profile("a=1\n").total_lines, 1);
        assert_eq!(line_profile("").total_lines, 0);
    }

    #[test]
    fn profile_leading_whitespace() {
        let p = line_profile("    x=1");
        assert_eq!(p.lines[0].leading_ws, "    ");
        let p = line_profile("\tx=1");
        assert_eq!(p.lines[0].leading_ws, "\t");
        assert_eq!(p.lines[0].indent_columns, 4);
    }

    #[test]
    fn profile_comments() {
        let p = line_profile("# top\nx = 1  # trailing\ns = '# not a comment'\n  # indented\n");
        assert!(p.lines[0].is_comment_only);
        assert!(p.lines[1].has_inline_comment && !p.lines[1].is_comment_only);
        assert!(!p.lines[2].has_inline_comment && !p.lines[2].is_comment_only);
        assert!(p.lines[3].is_comment_only);
    }

    #[test]
    fn add_function_record() {
        let f = parse_functions("def f(a, b):\n    return a + b", ParseMode::Strict).unwrap();
        assert_eq!(f.len(), 1);
        let f = &f[0];
        assert_eq!(f.name, "f");
        assert_eq!(
            f.params,
            vec![Param { name: "a".into(), has_annotation: false }, Param { name: "b".into(), has_annotation: false }]
        );
        assert_eq!((f.return_count, f.branch_count, f.body_line_span), (1, 0, 1));
        assert!(!f.has_docstring);
    }

    #[test]
    fn docstring_rule() {
        let f = parse_functions("def g():\n    \"\"\"doc\"\"\"\n    pass", ParseMode::Strict).unwrap();
        assert!(f[0].has_docstring);
        let f = parse_functions("def g():\n    x = \"doc\"\n", ParseMode::Strict).unwrap();
        assert!(!f[0].has_docstring);
    }

    #[test]
    fn no_functions() {
        assert!(parse_functions("x = 3", ParseMode::Strict).unwrap().is_empty());
    }

    #[test]
    fn nested_defs_and_methods() {
        let src = "class A:\n    def m(self, x: int) -> int:\n        def inner(y):\n            return y\n        return inner(x)\n\ndef free(cls):\n    pass\n";
        let f = parse_functions(src, ParseMode::Strict).unwrap();
        let names: Vec<_> = f.iter().map(|r| (r.name.as_str(), r.is_method)).collect();
        assert_eq!(names, vec![("m", true), ("inner", false), ("free", true)]);
        assert_eq!(f[0].counted_params().len(), 1);
        assert!(f[0].has_return_annotation && f[0].counted_params()[0].has_annotation);
        assert_eq!(f[0].return_count, 1);
        assert_eq!(f[0].body_line_span, 3);
    }

    #[test]
    fn async_def_and_decorators() {
        let src = "@dec\nasync def go(a):\n    async with x as y:\n        await y\n    async for i in a:\n        pass\n";
        let f = parse_functions(src, ParseMode::Strict).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].control_count, 2);
    }

    #[test]
    fn strict_rejects_match_lenient_keeps_going() {
        let src = "def a():\n    return 1\n\nmatch cmd:\n    case 1:\n        pass\n\ndef b():\n    pass\n";
        let err = parse_functions(src, ParseMode::Strict).unwrap_err();
        assert_eq!(err, ParseError::SyntaxUnsupported { line: 4, construct: "match".into() });
        let f = parse_functions(src, ParseMode::Lenient).unwrap();
        assert_eq!(f.len(), 2);
    }

    #[test]
    fn counts_branches_controls_try() {
        let src = "def f(x):\n    if x:\n        pass\n    elif x > 1:\n        pass\n    else:\n        pass\n    for i in x:\n        while i:\n            with a:\n                try:\n                    pass\n                except:\n                    pass\n";
        let f = &parse_functions(src, ParseMode::Strict).unwrap()[0];
        assert_eq!(f.branch_count, 2);
        assert_eq!(f.control_count, 5);
        assert!(f.has_try);
        assert_eq!(f.except_clauses, vec![ExceptKind::Bare]);
    }

    #[test]
    fn unexpected_indent_is_tolerated() {
        let src = "def f():\n  a = 1\n   b = 2\n  c = 3\n";
        let f = parse_functions(src, ParseMode::Strict).unwrap();
        assert_eq!(f[0].body_line_span, 3);
    }
}

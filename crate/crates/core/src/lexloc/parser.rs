//! Statement-level parsing over the token stream.
//!
//! Logical lines are grouped into a tree by indentation. Compound headers
//! (`if ...:`) own their indented block and any inline body after the
//! header colon. Function records are then read off that tree.

use serde::{Deserialize, Serialize};

use super::lexer::{Token, TokenKind};
use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    /// Unsupported block constructs become opaque statements.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExceptKind {
    Bare,
    GenericException,
    Specific,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub has_annotation: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionInfo {
    pub name: String,
    pub params: Vec<Param>,
    pub has_return_annotation: bool,
    pub body_line_span: usize,
    pub return_count: usize,
    pub branch_count: usize,
    pub control_count: usize,
    pub max_call_depth: usize,
    pub has_docstring: bool,
    pub has_try: bool,
    pub except_clauses: Vec<ExceptKind>,
    pub is_method: bool,
}

impl FunctionInfo {
    /// Parameters that count as arguments: the leading `self`/`cls` of a
    /// method is dropped.
    pub fn counted_params(&self) -> &[Param] {
        match self.params.first() {
            Some(p) if self.is_method && (p.name == "self" || p.name == "cls") => &self.params[1..],
            _ => &self.params,
        }
    }
}

/// One logical statement. `tokens` excludes comments, continuation
/// backslashes and layout tokens.
#[derive(Debug, Clone, Default)]
pub struct Stmt {
    pub tokens: Vec<Token>,
    pub first_line: usize,
    pub last_line: usize,
    pub body: Vec<Stmt>,
    /// Set when the statement ends in a header colon and owns `body`.
    pub is_header: bool,
}

const COMPOUND: &[&str] = &["def", "class", "if", "elif", "else", "for", "while", "with", "try", "except", "finally"];

impl Stmt {
    /// Leading keyword, skipping `async`.
    pub fn head(&self) -> Option<&str> {
        let mut it = self.tokens.iter();
        let first = it.next()?;
        if first.is_keyword("async") {
            return it.next().map(|t| t.text.as_str());
        }
        Some(first.text.as_str())
    }

    pub fn head_is(&self, kw: &str) -> bool {
        let mut it = self.tokens.iter();
        match it.next() {
            Some(t) if t.is_keyword("async") => it.next().is_some_and(|t| t.is_keyword(kw)),
            Some(t) => t.is_keyword(kw),
            None => false,
        }
    }

    pub fn is_decorator(&self) -> bool {
        self.tokens.first().is_some_and(|t| t.text == "@")
    }

    /// Last line covered by this statement or any nested one.
    pub fn end_line(&self) -> usize {
        self.body.iter().map(Stmt::end_line).fold(self.last_line, usize::max)
    }

    /// Header tokens: everything before the header colon.
    pub fn header_tokens(&self) -> &[Token] {
        if !self.is_header {
            return &self.tokens;
        }
        match header_colon(&self.tokens) {
            Some(i) => &self.tokens[..i],
            None => &self.tokens,
        }
    }
}

/// Index of the colon that ends a compound header, if any.
fn header_colon(tokens: &[Token]) -> Option<usize> {
    let mut depth = 0usize;
    let mut lambdas = 0usize;
    for (i, t) in tokens.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" | "{" if t.kind == TokenKind::Punct => depth += 1,
            ")" | "]" | "}" if t.kind == TokenKind::Punct => depth = depth.saturating_sub(1),
            "lambda" if t.kind == TokenKind::Keyword && depth == 0 => lambdas += 1,
            ":" if t.kind == TokenKind::Punct && depth == 0 => {
                if lambdas > 0 {
                    lambdas -= 1;
                } else {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Split at depth-0 occurrences of `sep` punctuation.
pub fn split_top_level<'a>(tokens: &'a [Token], sep: &str) -> Vec<&'a [Token]> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth = depth.saturating_sub(1),
                s if s == sep && depth == 0 => {
                    out.push(&tokens[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
    }
    out.push(&tokens[start..]);
    out
}

struct LogicalLine {
    level: usize,
    tokens: Vec<Token>,
    opens_block: bool,
}

fn logical_lines(tokens: &[Token]) -> Vec<LogicalLine> {
    let mut lines = Vec::new();
    let mut level = 0usize;
    let mut current: Vec<Token> = Vec::new();
    for t in tokens {
        match t.kind {
            TokenKind::Indent => level += 1,
            TokenKind::Dedent => level = level.saturating_sub(1),
            TokenKind::Newline => {
                if !current.is_empty() {
                    lines.push(LogicalLine { level, tokens: std::mem::take(&mut current), opens_block: false });
                }
            }
            TokenKind::Comment => {}
            TokenKind::Punct if t.text == "\\" => {}
            _ => current.push(t.clone()),
        }
    }
    if !current.is_empty() {
        lines.push(LogicalLine { level, tokens: current, opens_block: false });
    }
    for i in 0..lines.len() {
        let next_deeper = lines.get(i + 1).is_some_and(|n| n.level > lines[i].level);
        lines[i].opens_block = next_deeper;
    }
    lines
}

fn make_stmt(tokens: Vec<Token>) -> Stmt {
    let first_line = tokens.first().map_or(0, |t| t.line);
    let last_line = tokens.last().map_or(0, |t| t.end().0);
    Stmt { tokens, first_line, last_line, body: Vec::new(), is_header: false }
}

/// Turn one logical line into statements: `;` splits simple statements and
/// a compound header keeps its inline body as children.
fn expand_line(tokens: Vec<Token>) -> Vec<Stmt> {
    let starts_compound = {
        let mut it = tokens.iter();
        let first = it.next();
        let kw = match first {
            Some(t) if t.is_keyword("async") => it.next(),
            other => other,
        };
        kw.is_some_and(|t| t.kind == TokenKind::Keyword && COMPOUND.contains(&t.text.as_str()))
    };
    if starts_compound {
        if let Some(i) = header_colon(&tokens) {
            let inline: Vec<Token> = tokens[i + 1..].to_vec();
            let mut stmt = make_stmt(tokens);
            stmt.is_header = true;
            if !inline.is_empty() {
                stmt.body = expand_line(inline);
            }
            return vec![stmt];
        }
    }
    split_top_level(&tokens, ";").into_iter().filter(|part| !part.is_empty()).map(|part| make_stmt(part.to_vec())).collect()
}

fn build_block(lines: &[LogicalLine], idx: &mut usize, level: usize, mode: ParseMode) -> Result<Vec<Stmt>, ParseError> {
    let mut block: Vec<Stmt> = Vec::new();
    while *idx < lines.len() && lines[*idx].level >= level {
        let line = &lines[*idx];
        if line.level > level {
            // Indented block with no statement to own it (first line of input).
            let nested = build_block(lines, idx, line.level, mode)?;
            match block.last_mut() {
                Some(prev) => prev.body.extend(nested),
                None => block.extend(nested),
            }
            continue;
        }
        let opens_block = line.opens_block;
        let mut stmts = expand_line(line.tokens.clone());
        *idx += 1;
        if opens_block {
            let owner = stmts.last_mut().expect("logical line yields a statement");
            let ends_in_colon = line.tokens.last().is_some_and(|t| t.is_punct(":"));
            if ends_in_colon && !owner.is_header && mode == ParseMode::Strict {
                // A block header we do not model, e.g. `match x:`.
                return Err(ParseError::SyntaxUnsupported {
                    line: owner.first_line,
                    construct: owner.tokens.first().map(|t| t.text.clone()).unwrap_or_default(),
                });
            }
            let child_level = lines[*idx].level;
            owner.body.extend(build_block(lines, idx, child_level, mode)?);
        }
        block.extend(stmts);
    }
    Ok(block)
}

/// Parse a token stream into a statement tree.
pub fn parse_statements(tokens: &[Token], mode: ParseMode) -> Result<Vec<Stmt>, ParseError> {
    let lines = logical_lines(tokens);
    let mut idx = 0;
    let mut out = Vec::new();
    while idx < lines.len() {
        let level = lines[idx].level;
        out.extend(build_block(&lines, &mut idx, level, mode)?);
    }
    Ok(out)
}

/// Per-body counts shared by real functions and the module pseudo-function.
#[derive(Debug, Default, Clone)]
pub struct BodyStats {
    pub return_count: usize,
    pub branch_count: usize,
    pub control_count: usize,
    pub max_call_depth: usize,
    pub has_try: bool,
    pub except_clauses: Vec<ExceptKind>,
}

impl BodyStats {
    pub fn of(body: &[Stmt]) -> Self {
        let mut stats = BodyStats::default();
        stats.walk(body);
        stats.has_try |= !stats.except_clauses.is_empty();
        stats
    }

    fn walk(&mut self, body: &[Stmt]) {
        for stmt in body {
            if stmt.head_is("def") {
                continue;
            }
            if stmt.head_is("class") {
                self.walk(&stmt.body);
                continue;
            }
            match stmt.head() {
                Some("return") if stmt.tokens[0].kind == TokenKind::Keyword => self.return_count += 1,
                Some("if") if stmt.head_is("if") => {
                    self.branch_count += 1;
                    self.control_count += 1;
                }
                Some("elif") if stmt.head_is("elif") => self.branch_count += 1,
                Some("for" | "while" | "with") if stmt.is_header => self.control_count += 1,
                Some("try") if stmt.head_is("try") => {
                    self.control_count += 1;
                    self.has_try = true;
                }
                Some("except") if stmt.head_is("except") => self.except_clauses.push(except_kind(stmt.header_tokens())),
                _ => {}
            }
            if !stmt.is_decorator() {
                self.max_call_depth = self.max_call_depth.max(call_depth(stmt.header_tokens()));
            }
            self.walk(&stmt.body);
        }
    }
}

fn except_kind(header: &[Token]) -> ExceptKind {
    // header = `except [*] <types> [as name]`
    let types: Vec<&Token> = header[1..].iter().take_while(|t| !t.is_keyword("as")).filter(|t| !t.is_op("*")).collect();
    if types.is_empty() {
        ExceptKind::Bare
    } else if types.iter().any(|t| t.kind == TokenKind::Identifier && matches!(t.text.as_str(), "Exception" | "BaseException")) {
        ExceptKind::GenericException
    } else {
        ExceptKind::Specific
    }
}

/// Maximum nesting of call parentheses. A `(` opens a call when it follows
/// a name or a closing bracket.
pub fn call_depth(tokens: &[Token]) -> usize {
    let mut stack: Vec<bool> = Vec::new();
    let mut calls = 0usize;
    let mut best = 0usize;
    let mut prev: Option<&Token> = None;
    for t in tokens {
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "(" => {
                    let is_call = prev.is_some_and(|p| p.kind == TokenKind::Identifier || p.is_punct(")") || p.is_punct("]"));
                    stack.push(is_call);
                    if is_call {
                        calls += 1;
                        best = best.max(calls);
                    }
                }
                "[" | "{" => stack.push(false),
                ")" | "]" | "}" => calls -= usize::from(stack.pop() == Some(true)),
                _ => {}
            }
        }
        prev = Some(t);
    }
    best
}

fn parse_params(header: &[Token]) -> (Vec<Param>, bool) {
    let open = header.iter().position(|t| t.is_punct("("));
    let Some(open) = open else { return (Vec::new(), false) };
    let mut depth = 0usize;
    let mut close = header.len();
    for (i, t) in header.iter().enumerate().skip(open) {
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    depth -= 1;
                    if depth == 0 {
                        close = i;
                        break;
                    }
                }
                _ => {}
            }
        }
    }
    let inner = &header[open + 1..close.min(header.len())];
    let mut params = Vec::new();
    for part in split_top_level(inner, ",") {
        let mut rest = part;
        while rest.first().is_some_and(|t| t.is_op("*") || t.is_op("**")) {
            rest = &rest[1..];
        }
        let Some(name) = rest.first().filter(|t| t.kind == TokenKind::Identifier) else {
            continue;
        };
        let has_annotation = rest.get(1).is_some_and(|t| t.is_punct(":"));
        params.push(Param { name: name.text.clone(), has_annotation });
    }
    let has_return_annotation = header[close.min(header.len())..].iter().any(|t| t.is_punct("->"));
    (params, has_return_annotation)
}

/// Plain (non-f, non-bytes) string literals only.
fn is_docstring(stmt: &Stmt) -> bool {
    let plain = |t: &Token| {
        t.kind == TokenKind::String
            && !t.text.chars().take_while(|c| *c != '"' && *c != '\'').any(|c| matches!(c, 'f' | 'F' | 'b' | 'B'))
    };
    !stmt.tokens.is_empty() && stmt.body.is_empty() && stmt.tokens.iter().all(plain)
}

/// Inclusive line span of a statement list. A decorated definition starts
/// at its `def`/`class` line, not at the decorator.
pub fn body_span(body: &[Stmt]) -> usize {
    let first = body.iter().find(|s| !s.is_decorator()).or(body.first());
    match (first, body.last()) {
        (Some(first), Some(last)) => last.end_line() + 1 - first.first_line,
        _ => 0,
    }
}

pub fn has_docstring(body: &[Stmt]) -> bool {
    body.first().is_some_and(is_docstring)
}

fn function_record(stmt: &Stmt, in_class: bool) -> FunctionInfo {
    let header = stmt.header_tokens();
    let name_idx = header.iter().position(|t| t.is_keyword("def")).map_or(0, |i| i + 1);
    let name = header.get(name_idx).map(|t| t.text.clone()).unwrap_or_default();
    let (params, has_return_annotation) = parse_params(&header[name_idx.min(header.len())..]);
    let stats = BodyStats::of(&stmt.body);
    let first_is_self = params.first().is_some_and(|p| p.name == "self" || p.name == "cls");
    FunctionInfo {
        name,
        params,
        has_return_annotation,
        body_line_span: body_span(&stmt.body).max(1),
        return_count: stats.return_count,
        branch_count: stats.branch_count,
        control_count: stats.control_count,
        max_call_depth: stats.max_call_depth,
        has_docstring: has_docstring(&stmt.body),
        has_try: stats.has_try,
        except_clauses: stats.except_clauses,
        is_method: in_class || first_is_self,
    }
}

/// Collect function records in source order, nested ones included.
pub fn collect_functions(stmts: &[Stmt], in_class: bool, out: &mut Vec<FunctionInfo>) {
    for stmt in stmts {
        if stmt.head_is("def") && stmt.is_header {
            out.push(function_record(stmt, in_class));
            collect_functions(&stmt.body, false, out);
        } else if stmt.head_is("class") {
            collect_functions(&stmt.body, true, out);
        } else {
            collect_functions(&stmt.body, false, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexloc::lex;

    fn tree(src: &str) -> Vec<Stmt> {
        parse_statements(&lex(src).unwrap(), ParseMode::Strict).unwrap()
    }

    #[test]
    fn blocks_and_inline_bodies() {
        let t = tree("if a: return 1\nelse:\n    x = 2; y = 3\nz = 4\n");
        assert_eq!(t.len(), 3);
        assert!(t[0].is_header);
        assert_eq!(t[0].body.len(), 1);
        assert_eq!(t[1].body.len(), 2);
        assert_eq!(t[2].head(), Some("z"));
    }

    #[test]
    fn call_depth_counts_argument_nesting() {
        let depth = |s: &str| call_depth(&lex(s).unwrap());
        assert_eq!(depth("f(x)"), 1);
        assert_eq!(depth("f(g(x))"), 2);
        assert_eq!(depth("f(x)(y)"), 1);
        assert_eq!(depth("a(b).c(d)"), 1);
        assert_eq!(depth("f([g(h(1))])"), 3);
        assert_eq!(depth("if (a):"), 0);
        assert_eq!(depth("x = (1 + 2)"), 0);
    }

    #[test]
    fn lambda_colon_is_not_header_colon() {
        let t = tree("if f(lambda: 1):\n    pass\nwhile lambda x: x:\n    pass\n");
        assert!(t.iter().all(|s| s.is_header && s.body.len() == 1));
    }

    #[test]
    fn except_specificity() {
        let kinds = |src: &str| BodyStats::of(&tree(src)).except_clauses;
        assert_eq!(kinds("try:\n  a\nexcept:\n  b\n"), vec![ExceptKind::Bare]);
        assert_eq!(kinds("try:\n  a\nexcept Exception as e:\n  b\n"), vec![ExceptKind::GenericException]);
        assert_eq!(kinds("try:\n  a\nexcept (KeyError, BaseException):\n  b\n"), vec![ExceptKind::GenericException]);
        assert_eq!(kinds("try:\n  a\nexcept ValueError:\n  b\n"), vec![ExceptKind::Specific]);
    }
}

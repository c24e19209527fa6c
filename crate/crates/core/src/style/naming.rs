//! Identifier extraction at binding sites and the naming feature block.

use serde::{Deserialize, Serialize};

use crate::lexloc::{split_top_level, FunctionInfo, Stmt, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NameCategory {
    Dunder,
    Private,
    UpperCase,
    PascalCase,
    CamelCase,
    SnakeCase,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifierRecord {
    pub text: String,
    pub category: NameCategory,
}

/// Categories are tried in precedence order; the first match wins.
pub fn classify_identifier(name: &str) -> IdentifierRecord {
    IdentifierRecord { text: name.to_string(), category: category_of(name) }
}

fn category_of(name: &str) -> NameCategory {
    let bytes = name.as_bytes();
    let first = bytes.first().copied().unwrap_or(0);
    let rest = bytes.get(1..).unwrap_or(&[]);
    let alnum = |b: &u8| b.is_ascii_alphanumeric();
    if name.len() > 4 && name.starts_with("__") && name.ends_with("__") {
        NameCategory::Dunder
    } else if first == b'_' {
        NameCategory::Private
    } else if first.is_ascii_uppercase() && rest.iter().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || *b == b'_') {
        NameCategory::UpperCase
    } else if first.is_ascii_uppercase() && rest.iter().all(alnum) && rest.iter().any(u8::is_ascii_lowercase) {
        NameCategory::PascalCase
    } else if first.is_ascii_lowercase() && rest.iter().all(alnum) && rest.iter().any(u8::is_ascii_uppercase) {
        NameCategory::CamelCase
    } else if first.is_ascii_lowercase() && rest.iter().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || *b == b'_') {
        NameCategory::SnakeCase
    } else {
        NameCategory::Other
    }
}

/// Distinct names bound in the file, in first-seen order.
pub fn binding_identifiers(stmts: &[Stmt], functions: &[FunctionInfo]) -> Vec<String> {
    let mut names = Vec::new();
    for f in functions {
        names.push(f.name.clone());
        names.extend(f.counted_params().iter().map(|p| p.name.clone()));
    }
    walk(stmts, &mut names);
    let mut seen = std::collections::HashSet::new();
    names.retain(|n| !n.is_empty() && seen.insert(n.clone()));
    names
}

fn walk(stmts: &[Stmt], out: &mut Vec<String>) {
    for stmt in stmts {
        walrus_targets(&stmt.tokens, out);
        let header = stmt.header_tokens();
        let after_async = match header.first() {
            Some(t) if t.is_keyword("async") => &header[1..],
            _ => header,
        };
        let head = after_async.first();
        match head {
            Some(t) if t.is_keyword("class") && stmt.is_header => {
                if let Some(name) = after_async.get(1).filter(|t| t.kind == TokenKind::Identifier) {
                    out.push(name.text.clone());
                }
            }
            Some(t) if t.is_keyword("for") && stmt.is_header => {
                let end = after_async.iter().position(|t| t.is_keyword("in")).unwrap_or(after_async.len());
                bind_targets(&after_async[1..end], out);
            }
            Some(t) if t.is_keyword("with") && stmt.is_header => with_targets(&after_async[1..], out),
            Some(t) if t.is_keyword("except") && stmt.is_header => {
                if let Some(i) = top_level_as(after_async) {
                    bind_targets(&after_async[i + 1..], out);
                }
            }
            Some(t) if t.is_keyword("import") || t.is_keyword("from") => {
                for w in after_async.windows(2) {
                    if w[0].is_keyword("as") && w[1].kind == TokenKind::Identifier {
                        out.push(w[1].text.clone());
                    }
                }
            }
            Some(t) if t.kind == TokenKind::Keyword || stmt.is_header || stmt.is_decorator() => {}
            Some(_) => assignment_targets(&stmt.tokens, out),
            None => {}
        }
        walk(&stmt.body, out);
    }
}

fn walrus_targets(tokens: &[Token], out: &mut Vec<String>) {
    for w in tokens.windows(2) {
        if w[1].is_op(":=") && w[0].kind == TokenKind::Identifier {
            out.push(w[0].text.clone());
        }
    }
}

fn is_augmented(t: &Token) -> bool {
    t.kind == TokenKind::Operator
        && t.text.len() >= 2
        && t.text.ends_with('=')
        && !matches!(t.text.as_str(), "==" | "<=" | ">=" | "!=" | ":=")
}

fn assignment_targets(tokens: &[Token], out: &mut Vec<String>) {
    // augmented assignment: single target before the operator
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" | "{" if t.kind == TokenKind::Punct => depth += 1,
            ")" | "]" | "}" if t.kind == TokenKind::Punct => depth = depth.saturating_sub(1),
            _ if depth == 0 && is_augmented(t) => {
                bind_targets(&tokens[..i], out);
                return;
            }
            _ => {}
        }
    }
    let segments = split_top_level_op(tokens, "=");
    let (targets, _value) = segments.split_at(segments.len() - 1);
    if targets.is_empty() {
        // bare annotation `x: int`
        let parts = split_top_level(tokens, ":");
        if parts.len() == 2 {
            bind_targets(parts[0], out);
        }
        return;
    }
    for target in targets {
        let annotated = split_top_level(target, ":");
        bind_targets(annotated[0], out);
    }
}

fn split_top_level_op<'a>(tokens: &'a [Token], op: &str) -> Vec<&'a [Token]> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        match t.kind {
            TokenKind::Punct if matches!(t.text.as_str(), "(" | "[" | "{") => depth += 1,
            TokenKind::Punct if matches!(t.text.as_str(), ")" | "]" | "}") => depth = depth.saturating_sub(1),
            TokenKind::Operator if depth == 0 && t.text == op => {
                out.push(&tokens[start..i]);
                start = i + 1;
            }
            // a lambda's default `=` would otherwise split the value
            TokenKind::Keyword if depth == 0 && t.text == "lambda" => break,
            _ => {}
        }
    }
    out.push(&tokens[start..]);
    out
}

fn with_targets(items: &[Token], out: &mut Vec<String>) {
    if wrapped(items, "(", ")") {
        let inner = &items[1..items.len() - 1];
        if split_top_level(inner, ",").iter().any(|p| top_level_as(p).is_some()) {
            return with_targets(inner, out);
        }
    }
    for part in split_top_level(items, ",") {
        if let Some(i) = top_level_as(part) {
            bind_targets(&part[i + 1..], out);
        }
    }
}

fn top_level_as(tokens: &[Token]) -> Option<usize> {
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" | "{" if t.kind == TokenKind::Punct => depth += 1,
            ")" | "]" | "}" if t.kind == TokenKind::Punct => depth = depth.saturating_sub(1),
            "as" if depth == 0 && t.kind == TokenKind::Keyword => return Some(i),
            _ => {}
        }
    }
    None
}

/// True when the first token opens a bracket closed by the last token.
fn wrapped(tokens: &[Token], open: &str, close: &str) -> bool {
    if tokens.len() < 2 || !tokens[0].is_punct(open) || !tokens[tokens.len() - 1].is_punct(close) {
        return false;
    }
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate() {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth -= 1;
                if depth == 0 {
                    return i == tokens.len() - 1;
                }
            }
            _ => {}
        }
    }
    false
}

fn bind_targets(mut target: &[Token], out: &mut Vec<String>) {
    let parts = split_top_level(target, ",");
    if parts.len() > 1 {
        for p in parts {
            bind_targets(p, out);
        }
        return;
    }
    while target.first().is_some_and(|t| t.is_op("*")) {
        target = &target[1..];
    }
    if wrapped(target, "(", ")") || wrapped(target, "[", "]") {
        return bind_targets(&target[1..target.len() - 1], out);
    }
    let Some(last) = target.last() else { return };
    if last.kind != TokenKind::Identifier {
        return;
    }
    if target.len() == 1 || target[target.len() - 2].is_punct(".") {
        out.push(last.text.clone());
    }
}

/// The 14 naming features, all zero for an empty identifier set.
pub fn naming_features(identifiers: &[IdentifierRecord], source: &str) -> [f64; 14] {
    if identifiers.is_empty() {
        return [0.0; 14];
    }
    let n = identifiers.len() as f64;
    let chars: usize = identifiers.iter().map(|r| r.text.chars().count()).sum();
    let chars = chars as f64;
    let count_chars =
        |pred: &dyn Fn(char) -> bool| -> usize { identifiers.iter().map(|r| r.text.chars().filter(|c| pred(*c)).count()).sum() };
    let letters = count_chars(&|c| c.is_alphabetic());
    let upper = count_chars(&|c| c.is_alphabetic() && c.is_uppercase());
    let lower = count_chars(&|c| c.is_alphabetic() && c.is_lowercase());
    let underscores = count_chars(&|c| c == '_');
    let digits = count_chars(&|c| c.is_numeric());
    let no_upper = identifiers.iter().filter(|r| !r.text.chars().any(char::is_uppercase)).count();

    let (mut nonws, mut punct) = (0usize, 0usize);
    for c in source.chars().filter(|c| !c.is_whitespace()) {
        nonws += 1;
        if c.is_ascii_punctuation() && c != '_' {
            punct += 1;
        }
    }
    let share = |cat: NameCategory| identifiers.iter().filter(|r| r.category == cat).count() as f64 / n;
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let pascal = share(NameCategory::PascalCase);
    let snake = share(NameCategory::SnakeCase);
    let camel = share(NameCategory::CamelCase);
    let upper_case = share(NameCategory::UpperCase);
    [
        chars / n,
        no_upper as f64 / n,
        underscores as f64 / chars,
        digits as f64 / chars,
        ratio(punct, nonws),
        ratio(upper, letters),
        ratio(lower, letters),
        pascal,
        snake,
        camel,
        upper_case,
        share(NameCategory::Private),
        share(NameCategory::Dunder),
        pascal.max(snake).max(camel).max(upper_case),
    ]
}

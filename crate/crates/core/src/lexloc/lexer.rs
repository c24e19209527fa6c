//! Tokenizer for the Python subset the analyzer understands.

use serde::{Deserialize, Serialize};

use super::LexError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Number,
    String,
    Operator,
    Punct,
    Comment,
    Newline,
    Indent,
    Dedent,
}

impl TokenKind {
    /// Newline/Indent/Dedent carry layout, not text.
    pub fn is_layout(self) -> bool {
        matches!(self, TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based line of the first character.
    pub line: usize,
    /// 0-based character column of the first character.
    pub col: usize,
}

impl Token {
    fn new(kind: TokenKind, text: impl Into<String>, line: usize, col: usize) -> Self {
        Token { kind, text: text.into(), line, col }
    }

    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    pub fn is_keyword(&self, text: &str) -> bool {
        self.is(TokenKind::Keyword, text)
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.is(TokenKind::Punct, text)
    }

    pub fn is_op(&self, text: &str) -> bool {
        self.is(TokenKind::Operator, text)
    }

    /// Position just past the last character of the token.
    pub fn end(&self) -> (usize, usize) {
        let mut line = self.line;
        let mut col = self.col;
        for c in self.text.chars() {
            if c == '\n' {
                line += 1;
                col = 0;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    /// True for tokens that can end an operand (a following `-` is binary).
    pub fn ends_operand(&self) -> bool {
        match self.kind {
            TokenKind::Identifier | TokenKind::Number | TokenKind::String => true,
            TokenKind::Keyword => matches!(self.text.as_str(), "True" | "False" | "None"),
            TokenKind::Punct => matches!(self.text.as_str(), ")" | "]" | "}"),
            _ => false,
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del", "elif", "else",
    "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise",
    "return", "try", "while", "with", "yield",
];

const OPERATORS_3: &[&str] = &["**=", "//=", ">>=", "<<="];
const OPERATORS_2: &[&str] =
    &["**", "//", "<<", ">>", "<=", ">=", "==", "!=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", ":="];
const OPERATORS_1: &[char] = &['+', '-', '*', '/', '%', '@', '&', '|', '^', '~', '<', '>', '='];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// Expand tabs to 4-column tab stops and return the resulting width.
pub fn expanded_width(ws: &str) -> usize {
    let mut col = 0;
    for c in ws.chars() {
        if c == '\t' {
            col += 4 - col % 4;
        } else {
            col += 1;
        }
    }
    col
}

/// Strict tokenization: an unterminated string literal is an error.
pub fn lex(source: &str) -> Result<Vec<Token>, LexError> {
    Lexer::new(source, true).run()
}

/// Tokenization that never fails: an unterminated string runs to the end
/// of its line (or of the input, for triple-quoted strings).
pub fn lex_lenient(source: &str) -> Vec<Token> {
    Lexer::new(source, false).run().expect("lenient lexing is infallible")
}

/// CRLF and lone CR become LF.
pub fn normalize_newlines(source: &str) -> std::borrow::Cow<'_, str> {
    if source.contains('\r') {
        std::borrow::Cow::Owned(source.replace("\r\n", "\n").replace('\r', "\n"))
    } else {
        std::borrow::Cow::Borrowed(source)
    }
}

/// Place every text-bearing token at its recorded position.
pub fn render(tokens: &[Token]) -> String {
    let mut out = String::new();
    let (mut line, mut col) = (1usize, 0usize);
    for tok in tokens.iter().filter(|t| !t.text.is_empty()) {
        while line < tok.line {
            out.push('\n');
            line += 1;
            col = 0;
        }
        while col < tok.col {
            out.push(' ');
            col += 1;
        }
        out.push_str(&tok.text);
        (line, col) = tok.end();
    }
    out
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    strict: bool,
    depth: usize,
    indents: Vec<usize>,
    at_line_start: bool,
    continuation: bool,
    tokens: Vec<Token>,
}

impl Lexer {
    fn new(source: &str, strict: bool) -> Self {
        Lexer {
            chars: normalize_newlines(source).chars().collect(),
            pos: 0,
            line: 1,
            col: 0,
            strict,
            depth: 0,
            indents: vec![0],
            at_line_start: true,
            continuation: false,
            tokens: Vec::new(),
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 0;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, kind: TokenKind, text: String, line: usize, col: usize) {
        self.tokens.push(Token::new(kind, text, line, col));
    }

    /// Position for Newline/Dedent: just past the last emitted token.
    fn end_of_last(&self) -> (usize, usize) {
        self.tokens.iter().rev().find(|t| !t.text.is_empty()).map(Token::end).unwrap_or((self.line, self.col))
    }

    fn has_code_since_newline(&self) -> bool {
        self.tokens
            .iter()
            .rev()
            .take_while(|t| t.kind != TokenKind::Newline && t.kind != TokenKind::Dedent)
            .any(|t| !t.kind.is_layout() && t.kind != TokenKind::Comment)
    }

    fn emit_newline(&mut self) {
        if self.has_code_since_newline() {
            let (line, col) = self.end_of_last();
            self.push(TokenKind::Newline, String::new(), line, col);
        }
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        while self.pos < self.chars.len() {
            if self.at_line_start {
                self.at_line_start = false;
                if self.depth == 0 && !self.continuation {
                    self.handle_indentation();
                    continue;
                }
            }
            self.continuation = false;
            let c = self.peek(0).unwrap();
            match c {
                '\n' => {
                    self.bump();
                    self.at_line_start = true;
                    if self.depth == 0 {
                        self.emit_newline();
                    }
                }
                ' ' | '\t' | '\x0c' => {
                    self.bump();
                }
                '#' => self.comment(),
                '\\' if self.peek(1) == Some('\n') => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    self.push(TokenKind::Punct, "\\".into(), line, col);
                    self.bump();
                    self.continuation = true;
                    self.at_line_start = true;
                }
                c if c.is_alphabetic() || c == '_' => self.word()?,
                c if c.is_ascii_digit() => self.number(),
                '.' if self.peek(1).is_some_and(|d| d.is_ascii_digit()) => self.number(),
                '"' | '\'' => self.string(0)?,
                _ => self.operator_or_punct(),
            }
        }
        self.emit_newline();
        let (line, col) = self.end_of_last();
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(TokenKind::Dedent, String::new(), line, col);
        }
        Ok(self.tokens)
    }

    /// Measure leading whitespace of a physical line; blank and
    /// comment-only lines do not affect the indentation stack.
    fn handle_indentation(&mut self) {
        let start = self.pos;
        let mut end = start;
        while end < self.chars.len() && matches!(self.chars[end], ' ' | '\t' | '\x0c') {
            end += 1;
        }
        let next = self.chars.get(end).copied();
        if matches!(next, None | Some('\n') | Some('#')) {
            return;
        }
        if next == Some('\\') && self.chars.get(end + 1) == Some(&'\n') {
            return;
        }
        let ws: String = self.chars[start..end].iter().collect();
        let width = expanded_width(&ws);
        let line = self.line;
        let col = end - start;
        let top = *self.indents.last().unwrap();
        if width > top {
            self.indents.push(width);
            self.push(TokenKind::Indent, String::new(), line, col);
        } else if width < top {
            while *self.indents.last().unwrap() > width {
                self.indents.pop();
                self.push(TokenKind::Dedent, String::new(), line, col);
            }
            // Dedent to a column never opened: treat it as a fresh level.
            if *self.indents.last().unwrap() < width {
                self.indents.push(width);
                self.push(TokenKind::Indent, String::new(), line, col);
            }
        }
    }

    fn comment(&mut self) {
        let (line, col) = (self.line, self.col);
        let mut text = String::new();
        while let Some(c) = self.peek(0) {
            if c == '\n' {
                break;
            }
            text.push(c);
            self.bump();
        }
        self.push(TokenKind::Comment, text, line, col);
    }

    fn word(&mut self) -> Result<(), LexError> {
        let (line, col) = (self.line, self.col);
        let mut text = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_alphanumeric() || c == '_' {
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if matches!(self.peek(0), Some('"') | Some('\'')) && is_string_prefix(&text) {
            self.pos -= text.chars().count();
            self.col = col;
            return self.string(text.chars().count());
        }
        let kind = if is_keyword(&text) { TokenKind::Keyword } else { TokenKind::Identifier };
        self.push(kind, text, line, col);
        Ok(())
    }

    fn number(&mut self) {
        let (line, col) = (self.line, self.col);
        let mut text = String::new();
        let hex = self.peek(0) == Some('0') && matches!(self.peek(1), Some('x' | 'X'));
        while let Some(c) = self.peek(0) {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                text.push(c);
                self.bump();
                if !hex
                    && matches!(c, 'e' | 'E')
                    && matches!(self.peek(0), Some('+' | '-'))
                    && self.peek(1).is_some_and(|d| d.is_ascii_digit())
                {
                    text.push(self.bump().unwrap());
                }
            } else {
                break;
            }
        }
        self.push(TokenKind::Number, text, line, col);
    }

    /// `prefix_len` characters of string prefix (r, b, f, ...) precede the quote.
    fn string(&mut self, prefix_len: usize) -> Result<(), LexError> {
        let (line, col) = (self.line, self.col);
        let mut text = String::new();
        for _ in 0..prefix_len {
            text.push(self.bump().unwrap());
        }
        let quote = self.bump().unwrap();
        text.push(quote);
        let triple = self.peek(0) == Some(quote) && self.peek(1) == Some(quote);
        if triple {
            text.push(self.bump().unwrap());
            text.push(self.bump().unwrap());
        }
        loop {
            let Some(c) = self.peek(0) else {
                if self.strict {
                    return Err(LexError::UnterminatedString { line });
                }
                break;
            };
            if c == '\n' && !triple {
                if self.strict {
                    return Err(LexError::UnterminatedString { line });
                }
                break;
            }
            text.push(c);
            self.bump();
            if c == '\\' {
                if let Some(next) = self.peek(0) {
                    text.push(next);
                    self.bump();
                }
                continue;
            }
            if c == quote {
                if !triple {
                    break;
                }
                if self.peek(0) == Some(quote) && self.peek(1) == Some(quote) {
                    text.push(self.bump().unwrap());
                    text.push(self.bump().unwrap());
                    break;
                }
            }
        }
        self.push(TokenKind::String, text, line, col);
        Ok(())
    }

    fn operator_or_punct(&mut self) {
        let (line, col) = (self.line, self.col);
        let rest: String = self.chars[self.pos..(self.pos + 3).min(self.chars.len())].iter().collect();
        if rest == "..." {
            for _ in 0..3 {
                self.bump();
            }
            self.push(TokenKind::Punct, rest, line, col);
            return;
        }
        for (set, n) in [(OPERATORS_3, 3usize), (OPERATORS_2, 2)] {
            if rest.chars().count() >= n {
                let head: String = rest.chars().take(n).collect();
                if set.contains(&head.as_str()) {
                    for _ in 0..n {
                        self.bump();
                    }
                    self.push(TokenKind::Operator, head, line, col);
                    return;
                }
            }
        }
        if rest.starts_with("->") {
            self.bump();
            self.bump();
            self.push(TokenKind::Punct, "->".into(), line, col);
            return;
        }
        let c = self.bump().unwrap();
        let kind = if OPERATORS_1.contains(&c) {
            TokenKind::Operator
        } else {
            match c {
                '(' | '[' | '{' => self.depth += 1,
                ')' | ']' | '}' => self.depth = self.depth.saturating_sub(1),
                _ => {}
            }
            TokenKind::Punct
        };
        self.push(kind, c.to_string(), line, col);
    }
}

fn is_string_prefix(word: &str) -> bool {
    word.len() <= 2 && matches!(word.to_ascii_lowercase().as_str(), "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf")
}

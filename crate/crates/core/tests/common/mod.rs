#![allow(dead_code)]
//! Random well-formed Python programs for property tests.

pub mod grad;

use proptest::prelude::*;

pub const NAMES: &[&str] = &["a", "b", "total", "itemCount", "MAX_SIZE", "_hidden", "Value", "x1", "row_idx", "__slot__"];
const OPS: &[&str] = &["+", "-", "*", "//", "%"];

#[derive(Debug, Clone)]
pub enum Expr {
    Name(usize),
    Num(u32),
    Str(String),
    Bin(Box<Expr>, usize, Box<Expr>),
    Call(usize, Vec<Expr>),
}

#[derive(Debug, Clone)]
pub enum Stmt {
    Assign(usize, Expr),
    Return(Expr),
    If(Expr, Vec<Stmt>),
    For(usize, Expr, Vec<Stmt>),
    Call(usize, Vec<Expr>),
    Comment(String),
    Try(Vec<Stmt>, bool),
}

#[derive(Debug, Clone)]
pub struct Func {
    pub name: usize,
    pub params: Vec<usize>,
    pub doc: bool,
    pub hinted: bool,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub funcs: Vec<Func>,
    pub top: Vec<Stmt>,
    /// 0 = tabs, otherwise spaces per level.
    pub indent: usize,
}

pub struct Render {
    pub suffix: &'static str,
    pub order: Vec<usize>,
    pub trailing_blanks: usize,
}

impl Program {
    pub fn render(&self) -> String {
        self.render_with(&Render { suffix: "", order: (0..self.funcs.len()).collect(), trailing_blanks: 0 })
    }

    pub fn render_with(&self, r: &Render) -> String {
        let mut w = W { out: String::new(), indent: self.indent, suffix: r.suffix };
        for s in &self.top {
            w.stmt(0, s);
        }
        for &i in &r.order {
            w.func(&self.funcs[i]);
        }
        for _ in 0..r.trailing_blanks {
            w.out.push('\n');
        }
        w.out
    }
}

struct W {
    out: String,
    indent: usize,
    suffix: &'static str,
}

impl W {
    fn name(&self, i: usize) -> String {
        format!("{}{}", NAMES[i % NAMES.len()], self.suffix)
    }

    fn line(&mut self, depth: usize, text: &str) {
        let unit = if self.indent == 0 { "\t".to_string() } else { " ".repeat(self.indent) };
        self.out.push_str(&unit.repeat(depth));
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn expr(&self, e: &Expr) -> String {
        match e {
            Expr::Name(i) => self.name(*i),
            Expr::Num(n) => n.to_string(),
            Expr::Str(s) => format!("'{s}'"),
            Expr::Bin(a, op, b) => format!("{} {} {}", self.expr(a), OPS[op % OPS.len()], self.expr(b)),
            Expr::Call(f, args) => {
                format!("{}({})", self.name(*f), args.iter().map(|a| self.expr(a)).collect::<Vec<_>>().join(", "))
            }
        }
    }

    fn block(&mut self, depth: usize, body: &[Stmt]) {
        if body.iter().all(|s| matches!(s, Stmt::Comment(_))) {
            self.line(depth, "pass");
        }
        for s in body {
            self.stmt(depth, s);
        }
    }

    fn stmt(&mut self, depth: usize, s: &Stmt) {
        match s {
            Stmt::Assign(t, e) => {
                let text = format!("{} = {}", self.name(*t), self.expr(e));
                self.line(depth, &text)
            }
            Stmt::Return(e) => {
                let text = format!("return {}", self.expr(e));
                self.line(depth, &text)
            }
            Stmt::If(c, body) => {
                let text = format!("if {}:", self.expr(c));
                self.line(depth, &text);
                self.block(depth + 1, body);
            }
            Stmt::For(t, it, body) => {
                let text = format!("for {} in {}:", self.name(*t), self.expr(it));
                self.line(depth, &text);
                self.block(depth + 1, body);
            }
            Stmt::Call(f, args) => {
                let text = self.expr(&Expr::Call(*f, args.clone()));
                self.line(depth, &text)
            }
            Stmt::Comment(c) => self.line(depth, &format!("# {c}")),
            Stmt::Try(body, specific) => {
                self.line(depth, "try:");
                self.block(depth + 1, body);
                self.line(depth, if *specific { "except ValueError:" } else { "except:" });
                self.line(depth + 1, "pass");
            }
        }
    }

    fn func(&mut self, f: &Func) {
        let params: Vec<String> =
            f.params.iter().map(|p| if f.hinted { format!("{}: int", self.name(*p)) } else { self.name(*p) }).collect();
        let ret = if f.hinted { " -> int" } else { "" };
        let text = format!("def {}({}){ret}:", self.name(f.name), params.join(", "));
        self.line(0, &text);
        if f.doc {
            self.line(1, "\"\"\"Docstring.\"\"\"");
        }
        self.block(1, &f.body);
    }
}

fn name_idx() -> impl Strategy<Value = usize> {
    0..NAMES.len()
}

pub fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![name_idx().prop_map(Expr::Name), (0u32..1000).prop_map(Expr::Num), "[a-z ]{0,8}".prop_map(Expr::Str),];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (inner.clone(), 0..OPS.len(), inner.clone()).prop_map(|(a, o, b)| Expr::Bin(Box::new(a), o, Box::new(b))),
            (name_idx(), prop::collection::vec(inner, 0..3)).prop_map(|(f, a)| Expr::Call(f, a)),
        ]
    })
}

pub fn stmt() -> impl Strategy<Value = Stmt> {
    let simple = prop_oneof![
        (name_idx(), expr()).prop_map(|(t, e)| Stmt::Assign(t, e)),
        expr().prop_map(Stmt::Return),
        (name_idx(), prop::collection::vec(expr(), 0..3)).prop_map(|(f, a)| Stmt::Call(f, a)),
        "[a-z]{1,6}( [a-z]{1,6}){0,3}".prop_map(Stmt::Comment),
    ];
    simple.prop_recursive(2, 16, 4, |inner| {
        prop_oneof![
            (expr(), prop::collection::vec(inner.clone(), 1..4)).prop_map(|(c, b)| Stmt::If(c, b)),
            (name_idx(), expr(), prop::collection::vec(inner.clone(), 1..4)).prop_map(|(t, i, b)| Stmt::For(t, i, b)),
            (prop::collection::vec(inner, 1..3), any::<bool>()).prop_map(|(b, s)| Stmt::Try(b, s)),
        ]
    })
}

pub fn func() -> impl Strategy<Value = Func> {
    (name_idx(), prop::collection::vec(name_idx(), 0..4), any::<bool>(), any::<bool>(), prop::collection::vec(stmt(), 1..5))
        .prop_map(|(name, params, doc, hinted, body)| Func { name, params, doc, hinted, body })
}

pub fn program() -> impl Strategy<Value = Program> {
    (prop::collection::vec(func(), 1..4), prop::collection::vec(stmt(), 0..3), prop_oneof![Just(0usize), Just(2), Just(4)])
        .prop_map(|(funcs, top, indent)| Program { funcs, top, indent })
}

/// Programs whose rendering fits inside the 24×64 space-pattern window.
pub fn small_program() -> impl Strategy<Value = Program> {
    program().prop_filter("fits the space-pattern window", |p| {
        let src = p.render();
        src.lines().count() <= 24 && src.lines().all(|l| l.chars().count() <= 64)
    })
}

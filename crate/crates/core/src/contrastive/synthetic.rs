//! Synthetic Python files in three style archetypes, each file following
//! its own recipe of naming, structure and commenting habits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Archetype {
    /// snake_case names, 4-space indent
    Snake,
    /// camelCase names, 2-space indent
    Camel,
    /// UPPER_CASE-heavy names, tab indent
    Upper,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [Archetype::Snake, Archetype::Camel, Archetype::Upper];

    fn indent(self) -> &'static str {
        match self {
            Archetype::Snake => "    ",
            Archetype::Camel => "  ",
            Archetype::Upper => "\t",
        }
    }

    fn join(self, words: &[&str]) -> String {
        match self {
            Archetype::Snake => words.join("_"),
            Archetype::Upper => words.join("_").to_uppercase(),
            Archetype::Camel => {
                let mut s = words[0].to_string();
                for w in &words[1..] {
                    let mut c = w.chars();
                    s.extend(c.next().map(|f| f.to_ascii_uppercase()));
                    s.push_str(c.as_str());
                }
                s
            }
        }
    }

    /// Function names stay lowercase in the UPPER archetype.
    fn func_name(self, words: &[&str]) -> String {
        match self {
            Archetype::Upper => words.join("_"),
            other => other.join(words),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TryStyle {
    None,
    Specific,
    Bare,
}

/// Per-file habits; every knob leaves a trace in the token stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub archetype: Archetype,
    pub name_words: usize,
    pub params: usize,
    pub type_hints: bool,
    pub docstring: bool,
    pub comments: usize,
    pub try_style: TryStyle,
    pub statements: usize,
    pub call_nesting: usize,
    pub branches: usize,
    pub functions: usize,
}

impl Recipe {
    pub fn sample<R: Rng>(archetype: Archetype, rng: &mut R) -> Self {
        Recipe {
            archetype,
            name_words: rng.gen_range(1..=3),
            params: rng.gen_range(1..=4),
            type_hints: rng.gen_bool(0.5),
            docstring: rng.gen_bool(0.5),
            comments: rng.gen_range(0..=2),
            try_style: *[TryStyle::None, TryStyle::Specific, TryStyle::Bare].choose(rng).unwrap(),
            statements: *[2, 4, 6].choose(rng).unwrap(),
            call_nesting: rng.gen_range(1..=3),
            branches: rng.gen_range(0..=2),
            functions: rng.gen_range(3..=5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFile {
    pub file_id: String,
    pub recipe: Recipe,
    pub source: String,
}

const WORDS: &[&str] = &[
    "total", "count", "value", "item", "buffer", "index", "result", "node", "entry", "score", "limit", "offset", "record",
    "batch", "weight", "delta", "range", "state", "token", "label", "width", "depth", "price", "rate",
];
const CALLS: &[&str] = &["abs", "max", "min", "round", "len", "int"];
const COMMENTS: &[&str] = &[
    "adjust for the boundary case",
    "keep the running value bounded",
    "this mirrors the reference path",
    "cheap check before the main work",
];

struct Writer<'a> {
    recipe: &'a Recipe,
    out: String,
}

impl Writer<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str(self.recipe.archetype.indent());
        }
        self.out.push_str(text);
        self.out.push('\n');
    }
}

fn name<R: Rng>(recipe: &Recipe, rng: &mut R, func: bool) -> String {
    let words: Vec<&str> = (0..recipe.name_words).map(|_| *WORDS.choose(rng).unwrap()).collect();
    if func {
        recipe.archetype.func_name(&words)
    } else {
        recipe.archetype.join(&words)
    }
}

fn call_expr<R: Rng>(depth: usize, arg: &str, rng: &mut R) -> String {
    let mut e = arg.to_string();
    for level in 0..depth {
        let f = CALLS.choose(rng).unwrap();
        e = if level % 2 == 1 { format!("{f}({e}, {})", rng.gen_range(1..9)) } else { format!("{f}({e})") };
    }
    e
}

fn function<R: Rng>(w: &mut Writer<'_>, rng: &mut R) {
    let r = w.recipe.clone();
    let fname = name(&r, rng, true);
    let params: Vec<String> = (0..r.params).map(|i| format!("{}{}", name(&r, rng, false), i)).collect();
    let sig: Vec<String> = params.iter().map(|p| if r.type_hints { format!("{p}: int") } else { p.clone() }).collect();
    let ret = if r.type_hints { " -> int" } else { "" };
    w.line(0, &format!("def {fname}({}){ret}:", sig.join(", ")));
    if r.docstring {
        w.line(1, &format!("\"\"\"Compute the {} from its inputs.\"\"\"", WORDS.choose(rng).unwrap()));
    }
    let (depth, wrap) = match r.try_style {
        TryStyle::None => (1, false),
        _ => (2, true),
    };
    if wrap {
        w.line(1, "try:");
    }
    let mut live = params[0].clone();
    let comment_at: Vec<usize> = (0..r.comments).map(|c| c * r.statements / r.comments.max(1)).collect();
    for s in 0..r.statements {
        if comment_at.contains(&s) {
            w.line(depth, &format!("# {}", COMMENTS.choose(rng).unwrap()));
        }
        let target = name(&r, rng, false);
        let arg = format!("{live} + {}", params[s % params.len()]);
        w.line(depth, &format!("{target} = {}", call_expr(r.call_nesting, &arg, rng)));
        if s < r.branches {
            w.line(depth, &format!("if {target} > {}:", rng.gen_range(2..50)));
            w.line(depth + 1, &format!("{target} = {target} - 1"));
        }
        live = target;
    }
    if wrap {
        match r.try_style {
            TryStyle::Specific => w.line(1, "except ValueError:"),
            _ => w.line(1, "except:"),
        }
        w.line(2, "return 0");
    }
    w.line(1, &format!("return {live}"));
}

/// One file: its functions separated by blank lines.
pub fn generate_file(file_id: &str, recipe: Recipe, rng: &mut ChaCha8Rng) -> SyntheticFile {
    let mut w = Writer { recipe: &recipe, out: String::new() };
    for f in 0..recipe.functions {
        if f > 0 {
            w.out.push('\n');
        }
        function(&mut w, rng);
    }
    let source = w.out;
    SyntheticFile { file_id: file_id.to_string(), recipe, source }
}

/// `n` files cycling through the archetypes; deterministic in `seed`.
pub fn generate_corpus(n: usize, seed: u64) -> Vec<SyntheticFile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let recipe = Recipe::sample(Archetype::ALL[i % 3], &mut rng);
            generate_file(&format!("syn{i:04}"), recipe, &mut rng)
        })
        .collect()
}

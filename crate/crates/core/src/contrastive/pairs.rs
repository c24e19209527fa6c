//! Positive pairs: a whole file and one style-identical sub-snippet of it.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lexloc::{lex_lenient, line_profile_with_tokens, normalize_newlines, parse_statements, split_lines, ParseMode, Stmt};
use crate::nn::fnv1a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnippetKind {
    Function,
    Loop,
    CommentBlock,
}

/// An inclusive 1-based line range of the source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snippet {
    pub kind: SnippetKind,
    pub first_line: usize,
    pub last_line: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContrastivePair {
    pub id: String,
    pub file_id: String,
    #[serde(rename = "anchor")]
    pub anchor_code: String,
    #[serde(rename = "positive")]
    pub positive_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairConfig {
    pub max_pairs_per_file: usize,
    pub min_lines: usize,
    pub seed: u64,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig { max_pairs_per_file: 3, min_lines: 3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub file_id: String,
    pub snippets: usize,
}

#[derive(Debug, Clone, Default)]
pub struct PairSet {
    pub pairs: Vec<ContrastivePair>,
    /// Files with fewer than two snippets (InsufficientSnippets).
    pub skipped: Vec<SkippedFile>,
}

/// Function definitions, loop statements and comment blocks with at
/// least `min_lines` non-blank lines, in source order.
pub fn extract_snippets(source: &str, min_lines: usize) -> Vec<Snippet> {
    let source = normalize_newlines(source);
    let tokens = lex_lenient(&source);
    let lines = split_lines(&source);
    let profile = line_profile_with_tokens(&source, &tokens);
    let stmts = parse_statements(&tokens, ParseMode::Lenient).unwrap_or_default();

    let mut ranges = Vec::new();
    collect_blocks(&stmts, &mut ranges);
    let mut run_start = None;
    let flags = profile.lines.iter().map(|l| l.is_comment_only).chain(std::iter::once(false));
    for (i, comment) in flags.enumerate() {
        match (comment, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                ranges.push((SnippetKind::CommentBlock, s + 1, i));
                run_start = None;
            }
            _ => {}
        }
    }
    ranges.sort_by_key(|(kind, first, last)| (*first, *last, *kind as u8));
    ranges.dedup_by_key(|(_, first, last)| (*first, *last));

    ranges
        .into_iter()
        .filter_map(|(kind, first, last)| {
            let body = &lines[first - 1..last.min(lines.len())];
            let non_blank = body.iter().filter(|l| !l.trim().is_empty()).count();
            (non_blank >= min_lines).then(|| Snippet { kind, first_line: first, last_line: last, text: body.join("\n") + "\n" })
        })
        .collect()
}

fn collect_blocks(stmts: &[Stmt], out: &mut Vec<(SnippetKind, usize, usize)>) {
    for stmt in stmts {
        if stmt.is_header && stmt.head_is("def") {
            out.push((SnippetKind::Function, stmt.first_line, stmt.end_line()));
        } else if stmt.is_header && (stmt.head_is("for") || stmt.head_is("while")) {
            out.push((SnippetKind::Loop, stmt.first_line, stmt.end_line()));
        }
        collect_blocks(&stmt.body, out);
    }
}

/// Pairs for one file, or `None` when it has fewer than two snippets.
pub fn pairs_for_file(file_id: &str, source: &str, cfg: &PairConfig) -> Result<Vec<ContrastivePair>, SkippedFile> {
    let snippets = extract_snippets(source, cfg.min_lines);
    if snippets.len() < 2 {
        return Err(SkippedFile { file_id: file_id.to_string(), snippets: snippets.len() });
    }
    // per-file stream: the choice does not depend on which other files exist
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ fnv1a(0, file_id.as_bytes()));
    let take = cfg.max_pairs_per_file.min(snippets.len());
    let mut chosen = sample(&mut rng, snippets.len(), take).into_vec();
    chosen.sort_unstable();
    Ok(chosen
        .into_iter()
        .enumerate()
        .map(|(k, i)| ContrastivePair {
            id: format!("{file_id}#{k}"),
            file_id: file_id.to_string(),
            anchor_code: source.to_string(),
            positive_source: snippets[i].text.clone(),
            author_id: None,
        })
        .collect())
}

/// Files are processed in parallel chunks and merged back in input order.
pub fn build_pairs(files: &[(&str, &str)], cfg: &PairConfig) -> PairSet {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let chunk = files.len().div_ceil(workers).max(1);
    let results: Vec<Vec<Result<Vec<ContrastivePair>, SkippedFile>>> = std::thread::scope(|s| {
        let handles: Vec<_> = files
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|(id, src)| pairs_for_file(id, src, cfg)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("pair worker panicked")).collect()
    });
    let mut set = PairSet::default();
    for r in results.into_iter().flatten() {
        match r {
            Ok(p) => set.pairs.extend(p),
            Err(s) => set.skipped.push(s),
        }
    }
    set
}

pub fn write_jsonl(pairs: &[ContrastivePair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::to_string(p).expect("pair serializes"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl(text: &str) -> Result<Vec<ContrastivePair>, (usize, String)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e.to_string())))
        .collect()
}

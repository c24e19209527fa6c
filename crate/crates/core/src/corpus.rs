//! Code-pair corpora: ingestion with length filtering and deduplication,
//! seeded splits, and cached style vectors.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexloc::{lex_lenient, normalize_newlines, TokenKind};
use crate::style::{analyze, normalize, StyleVector, SCHEMA_VERSION};

pub const CORPUS_SCHEMA: &str = "s2c-corpus-v1";
pub const DEFAULT_MAX_TOKENS: usize = 378;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{source_name}:{line}: malformed record: {reason}")]
    MalformedRecord { source_name: String, line: usize, reason: String },
    #[error("invalid split ratios: {0}")]
    RatioError(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub code1: String,
    pub code2: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style_vec: Option<StyleVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub style_schema: String,
    pub max_tokens: usize,
    pub input_records: usize,
    pub kept: usize,
    pub dropped_duplicate: usize,
    pub dropped_length: usize,
    pub dropped_malformed: usize,
    pub splits: SplitCounts,
    /// Records whose style vector could not be computed.
    pub flagged: Vec<FlaggedRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlaggedRecord {
    pub id: String,
    pub reason: String,
}

impl Manifest {
    fn new(max_tokens: usize) -> Self {
        Manifest {
            schema: CORPUS_SCHEMA.into(),
            style_schema: SCHEMA_VERSION.into(),
            max_tokens,
            input_records: 0,
            kept: 0,
            dropped_duplicate: 0,
            dropped_length: 0,
            dropped_malformed: 0,
            splits: SplitCounts::default(),
            flagged: Vec::new(),
        }
    }

    pub fn reconciles(&self) -> bool {
        self.kept + self.dropped_duplicate + self.dropped_length + self.dropped_malformed == self.input_records
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFile {
    pub records: Vec<CorpusRecord>,
    pub manifest: Manifest,
}

impl CorpusFile {
    /// Recount splits and kept records from the records themselves.
    pub fn refresh_counts(&mut self) {
        let mut c = SplitCounts::default();
        for r in &self.records {
            match r.split {
                Some(Split::Train) => c.train += 1,
                Some(Split::Valid) => c.valid += 1,
                Some(Split::Test) => c.test += 1,
                None => {}
            }
        }
        self.manifest.splits = c;
        self.manifest.kept = self.records.len();
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn manifest_json(&self) -> String {
        serde_json::to_string_pretty(&self.manifest).expect("manifest serializes")
    }

    pub fn split_records(&self, split: Split) -> impl Iterator<Item = &CorpusRecord> {
        self.records.iter().filter(move |r| r.split == Some(split))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    pub max_tokens: usize,
    /// Skip and count malformed records instead of failing.
    pub lenient: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { max_tokens: DEFAULT_MAX_TOKENS, lenient: false }
    }
}

/// Lexer tokens excluding layout and line continuations; comments count.
pub fn token_count(source: &str) -> usize {
    lex_lenient(&normalize_newlines(source))
        .iter()
        .filter(|t| !t.kind.is_layout() && !(t.kind == TokenKind::Punct && t.text == "\\"))
        .count()
}

/// Streaming filter: every candidate passes through `offer` in input order.
struct Builder {
    opts: IngestOptions,
    manifest: Manifest,
    records: Vec<CorpusRecord>,
    seen_code2: HashSet<String>,
    seen_ids: HashSet<String>,
}

impl Builder {
    fn new(opts: IngestOptions) -> Self {
        Builder {
            opts,
            manifest: Manifest::new(opts.max_tokens),
            records: Vec::new(),
            seen_code2: HashSet::new(),
            seen_ids: HashSet::new(),
        }
    }

    fn malformed(&mut self, source_name: &str, line: usize, reason: String) -> Result<(), CorpusError> {
        if !self.opts.lenient {
            return Err(CorpusError::MalformedRecord { source_name: source_name.into(), line, reason });
        }
        self.manifest.dropped_malformed += 1;
        Ok(())
    }

    fn offer(&mut self, source_name: &str, line: usize, parsed: Result<CorpusRecord, String>) -> Result<(), CorpusError> {
        self.manifest.input_records += 1;
        let rec = match parsed {
            Ok(r) => r,
            Err(reason) => return self.malformed(source_name, line, reason),
        };
        if rec.code1.trim().is_empty() || rec.code2.trim().is_empty() {
            return self.malformed(source_name, line, "code1 and code2 must be non-empty".into());
        }
        if self.seen_ids.contains(&rec.id) {
            return self.malformed(source_name, line, format!("duplicate id `{}`", rec.id));
        }
        if token_count(&rec.code1) > self.opts.max_tokens || token_count(&rec.code2) > self.opts.max_tokens {
            self.manifest.dropped_length += 1;
            return Ok(());
        }
        if !self.seen_code2.insert(rec.code2.trim_end().to_string()) {
            self.manifest.dropped_duplicate += 1;
            return Ok(());
        }
        self.seen_ids.insert(rec.id.clone());
        self.records.push(rec);
        Ok(())
    }

    fn finish(self) -> CorpusFile {
        let mut c = CorpusFile { records: self.records, manifest: self.manifest };
        c.refresh_counts();
        c
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CorpusError {
    CorpusError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn ingest_jsonl_into(b: &mut Builder, name: &str, text: &str) -> Result<(), CorpusError> {
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<CorpusRecord>(line).map_err(|e| e.to_string());
        b.offer(name, i + 1, parsed)?;
    }
    Ok(())
}

pub fn ingest_jsonl(text: &str, opts: IngestOptions) -> Result<CorpusFile, CorpusError> {
    let mut b = Builder::new(opts);
    ingest_jsonl_into(&mut b, "<input>", text)?;
    Ok(b.finish())
}

/// `*.py` files under `dir` in sorted relative-path order.
fn python_files(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| io_err(&d, e))? {
            let path = entry.map_err(|e| io_err(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "py") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Ingest JSONL files and directories of source files, in the given
/// order. A source file becomes a record with `code1 == code2` and its
/// path relative to the directory as id.
pub fn ingest(paths: &[PathBuf], opts: IngestOptions) -> Result<CorpusFile, CorpusError> {
    let mut b = Builder::new(opts);
    for path in paths {
        if path.is_dir() {
            let files = python_files(path)?;
            // reads may run in parallel; records are offered in sorted order
            let texts: Vec<Result<String, CorpusError>> = std::thread::scope(|s| {
                let handles: Vec<_> = files
                    .chunks(files.len().div_ceil(4).max(1))
                    .map(|part| s.spawn(move || part.iter().map(|p| fs::read(p).map_err(|e| io_err(p, e))).collect::<Vec<_>>()))
                    .collect();
                handles
                    .into_iter()
                    .flat_map(|h| h.join().expect("reader panicked"))
                    .map(|r| r.map(|bytes| String::from_utf8_lossy(&bytes).into_owned()))
                    .collect()
            });
            for (file, text) in files.iter().zip(texts) {
                let text = text?;
                let id = file
                    .strip_prefix(path)
                    .unwrap_or(file)
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                let rec = CorpusRecord { id, code1: text.clone(), code2: text, style_vec: None, split: None };
                b.offer(&file.display().to_string(), 1, Ok(rec))?;
            }
        } else {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            ingest_jsonl_into(&mut b, &path.display().to_string(), &text)?;
        }
    }
    Ok(b.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
}

/// Seeded shuffle, then contiguous assignment: `floor(r·n)` records to
/// train and valid, the remainder to test. Record order is unchanged.
pub fn split(corpus: &mut CorpusFile, ratios: SplitRatios, seed: u64) -> Result<(), CorpusError> {
    let SplitRatios { train, valid } = ratios;
    if !(train.is_finite() && valid.is_finite()) || train < 0.0 || valid < 0.0 || train + valid > 1.0 + 1e-9 {
        return Err(CorpusError::RatioError(format!("train {train} + valid {valid} must be non-negative and sum to at most 1")));
    }
    let n = corpus.records.len();
    // the epsilon keeps 0.99·100 from flooring to 98
    let n_train = ((train * n as f64 + 1e-9).floor() as usize).min(n);
    let n_valid = ((valid * n as f64 + 1e-9).floor() as usize).min(n - n_train);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for (pos, &i) in order.iter().enumerate() {
        corpus.records[i].split = Some(if pos < n_train {
            Split::Train
        } else if pos < n_train + n_valid {
            Split::Valid
        } else {
            Split::Test
        });
    }
    corpus.refresh_counts();
    Ok(())
}

/// Fill every record's `style_vec` with `normalize(analyze(code2))`.
/// Failures are flagged in the manifest and leave the record in place.
pub fn precompute_styles(corpus: &mut CorpusFile) {
    precompute_styles_with(corpus, 1);
}

/// As [`precompute_styles`] over `workers` threads; the result does not
/// depend on the worker count.
pub fn precompute_styles_with(corpus: &mut CorpusFile, workers: usize) {
    let chunk = corpus.records.len().div_ceil(workers.max(1)).max(1);
    let results: Vec<Result<StyleVector, String>> = std::thread::scope(|s| {
        let handles: Vec<_> = corpus
            .records
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|r| analyze(&r.code2).map(|raw| normalize(&raw)).map_err(|e| e.to_string()))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("style worker panicked")).collect()
    });
    corpus.manifest.flagged.clear();
    for (rec, res) in corpus.records.iter_mut().zip(results) {
        match res {
            Ok(v) => rec.style_vec = Some(v),
            Err(reason) => {
                rec.style_vec = None;
                corpus.manifest.flagged.push(FlaggedRecord { id: rec.id.clone(), reason });
            }
        }
    }
}

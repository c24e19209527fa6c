use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use codestyle_core::contrastive::synthetic::generate_corpus;
use codestyle_core::contrastive::{
    build_pairs, eval_retrieval, pairs, prepare_pairs, split_by_file, write_log_csv, ContrastivePair, EpochLog, PairConfig,
    RetrievalReport, TrainConfig, Trainer,
};
use codestyle_core::corpus::{self, IngestOptions, Manifest, SplitRatios, DEFAULT_MAX_TOKENS};
use codestyle_core::lexloc::{lex, lex_lenient};
use codestyle_core::metrics::{css, total_loss, LossConfig, MetricReport};
use codestyle_core::nn::{checkpoint, l2_normalize, EncoderModel};
use codestyle_core::style::{self, analyze_with, StyleReport, StyleVector, LAYOUT, NAMING, STRUCTURAL};
use codestyle_core::{ParseMode, FEATURE_NAMES};
use serde::Serialize;

use crate::args::{CorpusArgs, PairsArgs, Settings, Tower, TrainArgs};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn mode(s: &Settings) -> ParseMode {
    if s.lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

/// Data goes to `--out` when given, stdout otherwise.
fn emit(s: &Settings, text: &str) -> Result<()> {
    match &s.out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn collect_py(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry.map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?.path();
        if path.is_dir() {
            collect_py(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "py") {
            out.push(path);
        }
    }
    Ok(())
}

/// Files are taken as given; directories contribute their `*.py` files
/// in sorted order, named relative to the directory.
fn sources(paths: &[PathBuf]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut files = Vec::new();
            collect_py(path, &mut files)?;
            files.sort();
            for f in files {
                let rel = f.strip_prefix(path).unwrap_or(&f);
                let id = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                out.push((id, read(&f)?));
            }
        } else {
            out.push((path.display().to_string(), read(path)?));
        }
    }
    Ok(out)
}

fn style_of(id: &str, source: &str, s: &Settings) -> Result<StyleVector> {
    let analysis = analyze_with(source, mode(s)).map_err(|e| CliError::from(e).context(id))?;
    for w in &analysis.warnings {
        eprintln!("warning: {id}: {w:?}");
    }
    Ok(style::normalize(&analysis.raw))
}

#[derive(Serialize)]
struct FileReport {
    file: String,
    #[serde(flatten)]
    report: StyleReport,
}

pub fn analyze(paths: &[PathBuf], s: &Settings) -> Result<()> {
    let single = paths.len() == 1 && !paths[0].is_dir();
    let mut reports = Vec::new();
    for (id, src) in sources(paths)? {
        let analysis = analyze_with(&src, mode(s)).map_err(|e| CliError::from(e).context(&id))?;
        for w in &analysis.warnings {
            eprintln!("warning: {id}: {w:?}");
        }
        reports.push(FileReport { file: id, report: StyleReport::new(analysis.raw) });
    }
    let text = if s.json {
        if single {
            to_json(&reports[0].report)
        } else {
            to_json(&reports)
        }
    } else if s.csv {
        let mut out = format!("file,{}\n", style::csv_header());
        for r in &reports {
            let _ = writeln!(out, "{},{}", r.file, style::csv_row(&r.report.raw.values));
        }
        out
    } else {
        let mut out = String::new();
        for r in &reports {
            let _ = writeln!(out, "{}\n{:<28} {:>12} {:>10}", r.file, "feature", "raw", "normalized");
            for (i, (name, raw)) in r.report.raw.named().enumerate() {
                let _ = writeln!(out, "{name:<28} {raw:>12.4} {:>10.4}", r.report.normalized[i]);
            }
        }
        out
    };
    emit(s, &text)
}

pub fn css_cmd(a: &Path, b: &Path, s: &Settings) -> Result<()> {
    let va = style_of(&a.display().to_string(), &read(a)?, s)?;
    let vb = style_of(&b.display().to_string(), &read(b)?, s)?;
    let value = css(&va, &vb)?;
    let text = if s.json { to_json(&serde_json::json!({ "css": value })) } else { format!("{value:?}\n") };
    emit(s, &text)
}

#[derive(Serialize)]
struct Delta {
    feature: &'static str,
    a: f64,
    b: f64,
    delta: f64,
}

#[derive(Serialize)]
struct DiffReport {
    css: f64,
    naming: Vec<Delta>,
    layout: Vec<Delta>,
    structural: Vec<Delta>,
}

pub fn diff(a: &Path, b: &Path, s: &Settings) -> Result<()> {
    let va = style_of(&a.display().to_string(), &read(a)?, s)?;
    let vb = style_of(&b.display().to_string(), &read(b)?, s)?;
    let section = |range: std::ops::Range<usize>| -> Vec<Delta> {
        range
            .map(|i| Delta { feature: FEATURE_NAMES[i], a: va.values[i], b: vb.values[i], delta: vb.values[i] - va.values[i] })
            .collect()
    };
    let report =
        DiffReport { css: css(&va, &vb)?, naming: section(NAMING), layout: section(LAYOUT), structural: section(STRUCTURAL) };
    let sections = [("naming", &report.naming), ("layout", &report.layout), ("structural", &report.structural)];
    let text = if s.json {
        to_json(&report)
    } else if s.csv {
        let mut out = String::from("section,feature,a,b,delta\n");
        for (name, rows) in sections {
            for d in rows {
                let _ = writeln!(out, "{name},{},{},{},{}", d.feature, d.a, d.b, d.delta);
            }
        }
        out
    } else {
        let mut out = String::new();
        for (name, rows) in sections {
            let _ = writeln!(out, "[{name}]");
            for d in rows {
                let mark = if d.delta.abs() > 1e-12 { "*" } else { " " };
                let _ = writeln!(out, "{mark} {:<28} {:>8.4} {:>8.4} {:>+9.4}", d.feature, d.a, d.b, d.delta);
            }
        }
        let _ = writeln!(out, "css {:.4}", report.css);
        out
    };
    emit(s, &text)
}

#[derive(Serialize)]
struct ScoreOutput {
    #[serde(flatten)]
    report: MetricReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_loss: Option<f64>,
}

pub fn score(candidate: &Path, reference: &Path, target: Option<&Path>, ce: Option<f64>, s: &Settings) -> Result<()> {
    let (cand, refr) = (read(candidate)?, read(reference)?);
    let target = match target {
        Some(t) => Some(style_of(&t.display().to_string(), &read(t)?, s)?),
        None => None,
    };
    let report = MetricReport::compute(&cand, &refr, target.as_ref(), mode(s))?;
    let loss_cfg = match s.lambda {
        Some(l) => LossConfig::new(l)?,
        None => LossConfig::default(),
    };
    let total = ce.map(|ce| total_loss(ce, report.style_loss, &loss_cfg)).transpose()?;
    let text = if s.csv {
        let (head, tail) = match total {
            Some(t) => (",total_loss", format!(",{t}")),
            None => ("", String::new()),
        };
        format!("{}{head}\n{}{tail}\n", MetricReport::CSV_HEADER, report.csv_row())
    } else {
        to_json(&ScoreOutput { report, lambda: total.map(|_| loss_cfg.lambda), total_loss: total })
    };
    emit(s, &text)
}

#[derive(Serialize)]
struct PairsSummary {
    files: usize,
    pairs: usize,
    skipped: Vec<String>,
    out: Option<PathBuf>,
}

pub fn pairs_cmd(a: &PairsArgs, s: &Settings) -> Result<()> {
    let files: Vec<(String, String)> = match a.synthetic {
        Some(n) => generate_corpus(n, s.seed).into_iter().map(|f| (f.file_id, f.source)).collect(),
        None if a.paths.is_empty() => return Err(CliError::usage("pairs needs input paths or --synthetic N")),
        None => sources(&a.paths)?,
    };
    let refs: Vec<(&str, &str)> = files.iter().map(|(id, src)| (id.as_str(), src.as_str())).collect();
    let cfg = PairConfig { max_pairs_per_file: a.max_pairs_per_file, min_lines: a.min_lines, seed: s.seed };
    let set = build_pairs(&refs, &cfg);
    let summary = PairsSummary {
        files: files.len(),
        pairs: set.pairs.len(),
        skipped: set.skipped.iter().map(|k| k.file_id.clone()).collect(),
        out: s.out.clone(),
    };
    eprintln!("{} pairs from {} files, {} files without snippets", summary.pairs, summary.files, summary.skipped.len());
    match &s.out {
        Some(path) => {
            write(path, &pairs::write_jsonl(&set.pairs))?;
            if s.json {
                print!("{}", to_json(&summary));
            }
        }
        None if s.json => print!("{}", to_json(&set.pairs)),
        None => print!("{}", pairs::write_jsonl(&set.pairs)),
    }
    Ok(())
}

fn read_pairs(path: &Path) -> Result<Vec<ContrastivePair>> {
    pairs::read_jsonl(&read(path)?).map_err(|(line, e)| CliError::input(format!("{}:{line}: {e}", path.display())))
}

#[derive(Serialize)]
struct TrainSummary {
    checkpoint: PathBuf,
    config: TrainConfig,
    train_pairs: usize,
    heldout_pairs: usize,
    unusable_pairs: usize,
    epochs: Vec<EpochLog>,
    retrieval: Option<RetrievalReport>,
}

pub fn train(a: &TrainArgs, s: &Settings) -> Result<()> {
    let out = s.out.clone().ok_or_else(|| CliError::usage("train needs --out PATH for the checkpoint"))?;
    if !(0.0..1.0).contains(&a.heldout) {
        return Err(CliError::usage("--heldout must lie in [0, 1)"));
    }
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        epochs: s.epochs.unwrap_or(defaults.epochs),
        batch_size: s.batch.unwrap_or(defaults.batch_size),
        temperature: s.temp.unwrap_or(defaults.temperature),
        embedding_dim: a.dim.unwrap_or(defaults.embedding_dim),
        lr: a.lr.unwrap_or(defaults.lr),
        seed: s.seed,
        symmetric_loss: a.symmetric,
    };
    let all = read_pairs(&a.pairs)?;
    let (train_pairs, heldout_pairs) = if a.heldout > 0.0 { split_by_file(&all, a.heldout, s.seed) } else { (all, Vec::new()) };
    let mut trainer = Trainer::new(config.clone())?;
    let (train, bad_train) = prepare_pairs(&trainer.model, &train_pairs);
    let (heldout, bad_held) = prepare_pairs(&trainer.model, &heldout_pairs);
    for (id, reason) in bad_train.iter().chain(&bad_held) {
        eprintln!("warning: skipping pair {id}: {reason}");
    }
    let total = config.epochs;
    let log = trainer.train(&train, |e| eprintln!("epoch {}/{total} loss {:.5} ({} ms)", e.epoch, e.mean_loss, e.wall_ms))?;
    checkpoint::save(&trainer.model, &out)?;
    if let Some(path) = &a.log {
        let mut buf = Vec::new();
        write_log_csv(&log, &mut buf).expect("writing to a Vec cannot fail");
        write(path, &String::from_utf8(buf).expect("csv is utf-8"))?;
    }
    let retrieval = if heldout.is_empty() { None } else { Some(eval_retrieval(&trainer.model, &heldout, &[1, 5, 10])?) };
    let summary = TrainSummary {
        checkpoint: out,
        config,
        train_pairs: train.len(),
        heldout_pairs: heldout.len(),
        unusable_pairs: bad_train.len() + bad_held.len(),
        epochs: log,
        retrieval,
    };
    if s.json {
        print!("{}", to_json(&summary));
    } else {
        let last = summary.epochs.last().map_or(f64::NAN, |e| e.mean_loss);
        println!("wrote {} ({} pairs, final loss {last:.5})", summary.checkpoint.display(), summary.train_pairs);
        if let Some(r) = &summary.retrieval {
            print!("{}", retrieval_text(r));
        }
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<EncoderModel<f32>> {
    checkpoint::load(path).map_err(|e| CliError::from(e).context(path.display()))
}

#[derive(Serialize)]
struct Embedding {
    file: String,
    embedding: Vec<f32>,
}

pub fn embed(model: &Path, tower: Tower, paths: &[PathBuf], s: &Settings) -> Result<()> {
    let model = load_model(model)?;
    let mut rows = Vec::new();
    for (id, src) in sources(paths)? {
        let raw = match tower {
            Tower::Style => model.style.forward_one(&style_of(&id, &src, s)?.as_f32())?,
            Tower::Code => {
                let tokens =
                    if s.lenient { lex_lenient(&src) } else { lex(&src).map_err(|e| CliError::input(format!("{id}: {e}")))? };
                model.code.forward_tokens(&tokens).map_err(|e| CliError::from(e).context(&id))?
            }
        };
        rows.push(Embedding { file: id, embedding: l2_normalize(&raw) });
    }
    let text = if s.json {
        to_json(&rows)
    } else if s.csv {
        let dim = model.embedding_dim();
        let mut out = String::from("file");
        for i in 0..dim {
            let _ = write!(out, ",e{i}");
        }
        out.push('\n');
        for r in &rows {
            let _ = writeln!(out, "{},{}", r.file, r.embedding.iter().map(f32::to_string).collect::<Vec<_>>().join(","));
        }
        out
    } else {
        rows.iter().map(|r| serde_json::to_string(r).expect("embedding serializes") + "\n").collect()
    };
    emit(s, &text)
}

fn retrieval_text(r: &RetrievalReport) -> String {
    let mut out = format!("held-out pairs {}\n", r.n);
    for (k, v) in &r.recall {
        let _ = writeln!(out, "recall@{k} {v:.4}");
    }
    let _ = writeln!(out, "mean rank {:.3}", r.mean_rank);
    out
}

pub fn eval_retrieval_cmd(model: &Path, pairs_path: &Path, ks: &[usize], s: &Settings) -> Result<()> {
    if ks.contains(&0) {
        return Err(CliError::usage("--k cutoffs must be positive"));
    }
    let model = load_model(model)?;
    let (prepared, bad) = prepare_pairs(&model, &read_pairs(pairs_path)?);
    for (id, reason) in &bad {
        eprintln!("warning: skipping pair {id}: {reason}");
    }
    let report = eval_retrieval(&model, &prepared, ks)?;
    let text = if s.json {
        to_json(&report)
    } else if s.csv {
        let mut out = String::from("k,recall\n");
        for (k, v) in &report.recall {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    } else {
        retrieval_text(&report)
    };
    emit(s, &text)
}

#[derive(Serialize)]
struct CorpusOutput<'a> {
    manifest: &'a Manifest,
    records: &'a [corpus::CorpusRecord],
}

pub fn corpus_cmd(a: &CorpusArgs, s: &Settings) -> Result<()> {
    if a.split.as_ref().is_some_and(|r| r.len() != 2) {
        return Err(CliError::usage("--split takes two shares, train and valid, e.g. 0.8,0.1"));
    }
    let opts = IngestOptions { max_tokens: s.max_tokens.unwrap_or(DEFAULT_MAX_TOKENS), lenient: s.lenient };
    let mut c = corpus::ingest(&a.paths, opts)?;
    if a.styles {
        corpus::precompute_styles(&mut c);
        for f in &c.manifest.flagged {
            eprintln!("warning: {}: no style vector: {}", f.id, f.reason);
        }
    }
    if let Some(r) = &a.split {
        corpus::split(&mut c, SplitRatios { train: r[0], valid: r[1] }, s.seed)?;
    }
    let m = &c.manifest;
    let line = format!(
        "{} records in, {} kept, {} duplicate, {} over {} tokens, {} malformed",
        m.input_records, m.kept, m.dropped_duplicate, m.dropped_length, m.max_tokens, m.dropped_malformed
    );
    match &s.out {
        Some(path) => {
            write(path, &c.to_jsonl())?;
            let manifest = a.manifest.clone().unwrap_or_else(|| path.with_extension("manifest.json"));
            write(&manifest, &c.manifest_json())?;
            if s.json {
                print!("{}", to_json(&c.manifest));
            } else {
                println!("{line}");
            }
        }
        None => {
            if let Some(manifest) = &a.manifest {
                write(manifest, &c.manifest_json())?;
            }
            eprintln!("{line}");
            if s.json {
                print!("{}", to_json(&CorpusOutput { manifest: &c.manifest, records: &c.records }));
            } else {
                print!("{}", c.to_jsonl());
            }
        }
    }
    Ok(())
}

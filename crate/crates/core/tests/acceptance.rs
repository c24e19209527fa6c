//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use codestyle_core::contrastive::synthetic::{generate_corpus, Archetype};
use codestyle_core::contrastive::{
    build_pairs, embed_pairs, eval_retrieval, info_nce, prepare_pairs, split_by_file, PairConfig, TrainConfig, Trainer,
};
use codestyle_core::corpus::{ingest, ingest_jsonl, precompute_styles, precompute_styles_with, token_count, IngestOptions};
use codestyle_core::lexloc::lex_lenient;
use codestyle_core::metrics::{bleu4, css, rouge, rouge_tokens, style_loss, RougeVariant};
use codestyle_core::nn::{checkpoint, CodeTowerConfig, EncoderConfig, EncoderModel, Matrix, NnError, StyleTowerConfig};
use codestyle_core::style::{analyze, normalize, StyleVector, FEATURE_NAMES, STYLE_DIM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn golden_sources() -> Vec<(String, String)> {
    let mut paths: Vec<_> = fs::read_dir(golden_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    paths
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "py"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect()
}

/// Golden sources plus a synthetic batch: the fixture corpus shared by
/// the determinism and style-loss checks.
fn fixture_corpus() -> Vec<(String, String)> {
    let mut all = golden_sources();
    all.extend(generate_corpus(60, 11).into_iter().map(|f| (format!("{}.py", f.file_id), f.source)));
    all
}

fn golden_vectors() -> Outcome {
    let start = Instant::now();
    let dir = golden_dir();
    let mut paths: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    let mut files = 0;
    let mut seen: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); STYLE_DIM];
    for path in paths.iter().filter(|p| p.extension().is_some_and(|e| e == "json")) {
        let expected: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        let source = fs::read_to_string(dir.join(expected["source"].as_str().unwrap())).unwrap();
        let raw = analyze(&source).map_err(|e| format!("{}: {e}", path.display()))?;
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            let want = expected["raw"][name].as_f64().ok_or_else(|| format!("{}: missing {name}", path.display()))?;
            ensure((raw.values[i] - want).abs() <= 1e-9, || {
                format!("{}: {name} = {} expected {want}", path.display(), raw.values[i])
            })?;
            seen[i].insert(want.to_bits());
        }
        files += 1;
    }
    let elapsed = start.elapsed();
    ensure(files >= 12, || format!("only {files} golden files"))?;
    // a feature is exercised when the goldens pin it to at least two values
    let flat: Vec<&str> = seen.iter().zip(FEATURE_NAMES).filter(|(s, _)| s.len() < 2).map(|(_, n)| n).collect();
    ensure(flat.is_empty(), || format!("features never varied: {flat:?}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{files} files, all {STYLE_DIM} features varied, {elapsed:.0?}"))
}

fn serialized(sources: &[(String, String)]) -> Result<Vec<String>, String> {
    sources
        .iter()
        .map(|(name, src)| {
            let raw = analyze(src).map_err(|e| format!("{name}: {e}"))?;
            Ok(format!("{}\t{}", serde_json::to_string(&raw).unwrap(), serde_json::to_string(&normalize(&raw)).unwrap()))
        })
        .collect()
}

fn determinism() -> Outcome {
    let corpus = fixture_corpus();
    let first = serialized(&corpus)?;
    let second = serialized(&corpus)?;
    ensure(first == second, || "two serial passes differ".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (name, src) in &corpus {
        fs::write(dir.path().join(name), src).map_err(|e| e.to_string())?;
    }
    let base = ingest(&[dir.path().to_path_buf()], IngestOptions::default()).map_err(|e| e.to_string())?;
    let mut serial = base.clone();
    precompute_styles(&mut serial);
    let mut outputs = vec![serial.to_jsonl()];
    for workers in [2, 4, 7] {
        let mut parallel = base.clone();
        precompute_styles_with(&mut parallel, workers);
        outputs.push(parallel.to_jsonl());
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), || "parallel ingestion changed the serialized corpus".into())?;
    ensure(serial.manifest.flagged.is_empty(), || format!("flagged: {:?}", serial.manifest.flagged))?;
    for r in &serial.records {
        let direct = serde_json::to_string(&normalize(&analyze(&r.code2).unwrap())).unwrap();
        let stored = serde_json::to_string(r.style_vec.as_ref().unwrap()).unwrap();
        ensure(direct == stored, || format!("{}: ingested vector differs from direct analysis", r.id))?;
    }
    Ok(format!("{} files, 2 serial passes and 4 ingestion runs byte-identical", corpus.len()))
}

fn info_nce_checks() -> Outcome {
    let uniform = Matrix::from_vec(16, 4, (0..16).flat_map(|_| [0.5f64, 0.5, 0.5, 0.5]).collect());
    let l16 = info_nce(&uniform, &uniform, 0.07, false).map_err(|e| e.to_string())?;
    ensure((l16 - 16f64.ln()).abs() < 1e-6, || format!("uniform B=16 gave {l16}"))?;
    ensure((l16 - 2.772589).abs() < 1e-6, || format!("uniform B=16 gave {l16}"))?;
    // orthogonal unit rows at τ = 1: loss = ln(1 + e^-1)
    let eye = Matrix::from_vec(2, 2, vec![1.0f64, 0.0, 0.0, 1.0]);
    let l2 = info_nce(&eye, &eye, 1.0, false).map_err(|e| e.to_string())?;
    ensure((l2 - 0.313262).abs() < 1e-6, || format!("B=2 case gave {l2}"))?;
    Ok(format!("ln16 case {l16:.9}, B=2 case {l2:.9}"))
}

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let mut checked = Vec::new();
    let mut worst: f64 = 0.0;
    for seed in 0u64.. {
        if checked.len() == 5 {
            break;
        }
        // seeds where a ReLU pre-activation sits within h of zero make the
        // finite difference straddle a kink, so they are skipped
        if common::grad::Problem::new(seed).kink_margin() <= 1e-4 {
            continue;
        }
        let (err, n) = common::grad::max_relative_error(seed, 1e-5);
        ensure(n > 1000, || format!("seed {seed}: only {n} parameters checked"))?;
        ensure(err < 1e-4, || format!("seed {seed}: max relative error {err:e}"))?;
        worst = worst.max(err);
        checked.push(seed);
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("seeds {checked:?}, worst relative error {worst:.2e}, {elapsed:.1?}"))
}

fn mean_cosines(m: &Matrix<f32>, labels: &[Archetype]) -> (f64, f64) {
    let (mut within, mut wn, mut cross, mut cn) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..m.rows {
        for j in 0..m.rows {
            if i == j {
                continue;
            }
            let s: f64 = m.row(i).iter().zip(m.row(j)).map(|(x, y)| (*x as f64) * (*y as f64)).sum();
            if labels[i] == labels[j] {
                within += s;
                wn += 1;
            } else {
                cross += s;
                cn += 1;
            }
        }
    }
    (within / wn as f64, cross / cn as f64)
}

fn desk_training() -> Outcome {
    let start = Instant::now();
    let seed = 0;
    let files = generate_corpus(300, seed);
    let refs: Vec<(&str, &str)> = files.iter().map(|f| (f.file_id.as_str(), f.source.as_str())).collect();
    let set = build_pairs(&refs, &PairConfig { seed, ..Default::default() });
    let (train_pairs, heldout_pairs) = split_by_file(&set.pairs, 0.2, seed);
    let config = TrainConfig { seed, epochs: 30, batch_size: 16, temperature: 0.07, ..Default::default() };
    let mut trainer = Trainer::new(config).map_err(|e| e.to_string())?;
    let (train, f1) = prepare_pairs(&trainer.model, &train_pairs);
    let (heldout, f2) = prepare_pairs(&trainer.model, &heldout_pairs);
    ensure(f1.is_empty() && f2.is_empty(), || format!("unpreparable pairs: {f1:?} {f2:?}"))?;
    let log = trainer.train(&train, |_| {}).map_err(|e| e.to_string())?;
    let report = eval_retrieval(&trainer.model, &heldout, &[1, 5]).map_err(|e| e.to_string())?;
    let recall1 = report.recall[0].1;

    let (_, style_emb) = embed_pairs(&trainer.model, &heldout).map_err(|e| e.to_string())?;
    let labels: Vec<Archetype> =
        heldout.iter().map(|p| files.iter().find(|f| f.file_id == p.file_id).unwrap().recipe.archetype).collect();
    let (within, cross) = mean_cosines(&style_emb, &labels);
    let (first, last) = (log[0].mean_loss, log[log.len() - 1].mean_loss);
    let elapsed = start.elapsed();

    let summary = format!(
        "{} train / {} held-out pairs, recall@1 {recall1:.3}, cosine within {within:.3} cross {cross:.3}, loss {first:.3} -> {last:.3}, {elapsed:.1?}",
        train.len(),
        heldout.len()
    );
    ensure(recall1 >= 0.9, || format!("recall@1 below 0.9: {summary}"))?;
    ensure(cross < within, || format!("archetypes not separated: {summary}"))?;
    ensure(last < first, || format!("loss did not fall: {summary}"))?;
    ensure(elapsed < Duration::from_secs(300), || format!("over five minutes: {summary}"))?;
    Ok(summary)
}

/// Longest common subsequence by enumerating every subsequence of `a`.
fn brute_lcs(a: &[&str], b: &[&str]) -> usize {
    (0u32..1 << a.len())
        .filter(|mask| {
            let mut it = b.iter();
            (0..a.len()).filter(|i| mask & (1 << i) != 0).all(|i| it.any(|y| *y == a[i]))
        })
        .map(u32::count_ones)
        .max()
        .unwrap_or(0) as usize
}

fn rouge_l_oracle(a: &[&str], b: &[&str]) -> Result<(), String> {
    let l = brute_lcs(a, b) as f64;
    let (p, r) = (l / a.len() as f64, l / b.len() as f64);
    let want = if l == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    let got = rouge_tokens(a, b, RougeVariant::RL).map_err(|e| e.to_string())?.f1;
    ensure((got - want).abs() < 1e-12, || format!("{a:?} vs {b:?}: {got} expected {want}"))
}

fn all_sequences(max_len: usize) -> Vec<Vec<&'static str>> {
    let mut out: Vec<Vec<&str>> = Vec::new();
    let mut layer: Vec<Vec<&str>> = vec![vec![]];
    for _ in 0..max_len {
        layer = layer.iter().flat_map(|s| ["a", "b", "c"].map(|t| [s.as_slice(), &[t]].concat())).collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn metric_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut unit = || StyleVector::new(std::array::from_fn(|_| rng.gen_range(0.0..=1.0))).unwrap();
    for _ in 0..1000 {
        let (a, b) = (unit(), unit());
        ensure(css(&a, &a).unwrap() == 1.0, || format!("css(v,v) != 1 for {:?}", a.values))?;
        ensure(css(&a, &b).unwrap() == css(&b, &a).unwrap(), || "css is not symmetric".into())?;
    }

    let variants = [RougeVariant::R1, RougeVariant::R2, RougeVariant::RL];
    let sources = golden_sources();
    for (name, src) in &sources {
        ensure(bleu4(src, src).unwrap() == 1.0, || format!("bleu4({name}, itself) != 1"))?;
        for v in variants {
            ensure(rouge(src, src, v).unwrap().f1 == 1.0, || format!("{v:?}({name}, itself) != 1"))?;
        }
    }
    let (left, right) = ("alpha = beta + gamma\n", "def f(x):\n    return [x]\n");
    ensure(bleu4(left, right).unwrap() == 0.0, || "bleu4 on disjoint fixtures != 0".into())?;
    for v in variants {
        ensure(rouge(left, right, v).unwrap().f1 == 0.0, || format!("{v:?} on disjoint fixtures != 0"))?;
    }

    // every pair of sequences up to length 4, then random pairs up to 12
    let short = all_sequences(4);
    for a in &short {
        for b in &short {
            rouge_l_oracle(a, b)?;
        }
    }
    let symbols = ["a", "b", "c"];
    let random = 5000;
    for _ in 0..random {
        let mut seq = || -> Vec<&str> { (0..rng.gen_range(1..=12)).map(|_| symbols[rng.gen_range(0..3)]).collect() };
        let (a, b) = (seq(), seq());
        rouge_l_oracle(&a, &b)?;
    }
    Ok(format!(
        "1000 css pairs, {} identity fixtures, ROUGE-L exact on {} exhaustive and {random} random pairs",
        sources.len(),
        short.len() * short.len()
    ))
}

const INDENT_TARGET: &str = "\
def load(path):
    with open(path) as handle:
        rows = handle.readlines()
    return rows


def count(rows):
    total = 0
    for row in rows:
        if row:
            total += 1
    return total
";

fn reindent(source: &str, width: usize, only_first_function: bool) -> String {
    let mut in_second = false;
    let mut out = String::new();
    for line in source.lines() {
        if line.starts_with("def count") {
            in_second = true;
        }
        let depth = (line.len() - line.trim_start().len()) / 4;
        let w = if only_first_function && !in_second { 4 } else { width };
        out.push_str(&" ".repeat(depth * w));
        out.push_str(line.trim_start());
        out.push('\n');
    }
    out
}

fn style_loss_behavior() -> Outcome {
    let corpus = fixture_corpus();
    for (name, src) in &corpus {
        let own = normalize(&analyze(src).map_err(|e| format!("{name}: {e}"))?);
        let loss = style_loss(src, &own).map_err(|e| format!("{name}: {e}"))?;
        ensure(loss == 0.0, || format!("{name}: self style loss {loss}"))?;
    }

    let target = normalize(&analyze(INDENT_TARGET).unwrap());
    let source = reindent(INDENT_TARGET, 2, false);
    let halfway = reindent(INDENT_TARGET, 2, true);
    let steps = [&source, &halfway, &INDENT_TARGET.to_string()].map(|s| style_loss(s, &target).unwrap());
    ensure(steps[0] > steps[1] && steps[1] > steps[2], || format!("losses not strictly decreasing: {steps:?}"))?;
    Ok(format!("{} fixtures at zero, indentation pair {:.5} -> {:.5} -> {:.5}", corpus.len(), steps[0], steps[1], steps[2]))
}

fn record(id: &str, code2: &str) -> String {
    serde_json::json!({"id": id, "code1": "x = 1\n", "code2": code2}).to_string()
}

fn corpus_filter() -> Outcome {
    let line_of = |n: usize, word: &str| vec![word; n].join(" ") + "\n";
    let (at_cap, over_cap) = (line_of(378, "t"), line_of(379, "u"));
    ensure(token_count(&at_cap) == 378 && token_count(&over_cap) == 379, || "boundary fixtures miscounted".into())?;
    let boundary = [record("at", &at_cap), record("over", &over_cap)].join("\n");
    let c = ingest_jsonl(&boundary, IngestOptions::default()).map_err(|e| e.to_string())?;
    let ids: Vec<&str> = c.records.iter().map(|r| r.id.as_str()).collect();
    ensure(ids == ["at"], || format!("kept {ids:?}"))?;

    // 12 distinct records, 4 planted duplicates, 3 oversized, 2 malformed
    let mut lines: Vec<String> = (0..12).map(|i| record(&format!("u{i}"), &format!("value_{i} = {i}\n"))).collect();
    for (k, i) in [3, 7, 7, 0].iter().enumerate() {
        lines.insert(2 * k + 5, record(&format!("dup{k}"), &format!("value_{i} = {i}\n")));
    }
    for k in 0..3 {
        lines.push(record(&format!("big{k}"), &line_of(400 + k, "w")));
    }
    lines.insert(1, "{\"id\": \"broken\"".into());
    lines.push("[1, 2, 3]".into());
    let c = ingest_jsonl(&lines.join("\n"), IngestOptions { lenient: true, ..Default::default() }).map_err(|e| e.to_string())?;
    let m = &c.manifest;
    let counts = (m.input_records, m.kept, m.dropped_duplicate, m.dropped_length, m.dropped_malformed);
    ensure(counts == (21, 12, 4, 3, 2), || format!("manifest counts {counts:?}"))?;
    ensure(m.reconciles(), || "manifest does not reconcile".into())?;
    ensure(c.records.len() == m.kept, || "record count disagrees with manifest".into())?;
    Ok(format!("378 kept, 379 dropped; planted fixture {counts:?} reconciles"))
}

fn random_config(rng: &mut ChaCha8Rng) -> EncoderConfig {
    let hidden = rng.gen_range(1..4);
    let mut dims = vec![STYLE_DIM];
    dims.extend((0..hidden).map(|_| rng.gen_range(2..24)));
    let output = rng.gen_range(2..24);
    dims.push(output);
    EncoderConfig {
        style: StyleTowerConfig { residual_from: rng.gen_range(1..dims.len() - 1), dims },
        code: CodeTowerConfig {
            buckets: rng.gen_range(8..200),
            embed_dim: rng.gen_range(2..16),
            hidden: rng.gen_range(2..24),
            output,
            hash_seed: rng.gen(),
        },
    }
}

fn forward_bits(model: &EncoderModel<f32>, style: &[f32], code: &str) -> Vec<u32> {
    let s = model.style.forward_one(style).unwrap();
    let c = model.code.forward_tokens(&lex_lenient(code)).unwrap();
    s.iter().chain(&c).map(|v| v.to_bits()).collect()
}

fn expect_err(bytes: &[u8], what: &str, matches: fn(&NnError) -> bool) -> Result<(), String> {
    match checkpoint::from_bytes(bytes) {
        Err(e) if matches(&e) => Ok(()),
        Err(e) => Err(format!("{what}: wrong error {e:?}")),
        Ok(_) => Err(format!("{what}: loaded without error")),
    }
}

fn checkpoint_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let snippets = &common::grad::SNIPPETS;
    let mut last = Vec::new();
    for i in 0..10u64 {
        let config = if i == 0 { EncoderConfig::default() } else { random_config(&mut rng) };
        let model = EncoderModel::<f32>::init(config, rng.gen()).map_err(|e| e.to_string())?;
        let style: Vec<f32> = (0..STYLE_DIM).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let code = snippets[i as usize % snippets.len()];
        let before = forward_bits(&model, &style, code);
        let path = dir.path().join(format!("m{i}.s2c"));
        checkpoint::save(&model, &path).map_err(|e| e.to_string())?;
        let loaded = checkpoint::load(&path).map_err(|e| format!("model {i}: {e}"))?;
        ensure(forward_bits(&loaded, &style, code) == before, || format!("model {i}: forward changed after reload"))?;
        last = fs::read(&path).map_err(|e| e.to_string())?;
    }

    let mut bad_magic = last.clone();
    bad_magic[0] ^= 0xff;
    expect_err(&bad_magic, "bad magic", |e| matches!(e, NnError::BadMagic))?;
    expect_err(&last[..last.len() - 3], "truncated blob", |e| matches!(e, NnError::TruncatedBlob(_)))?;
    expect_err(&last[..6], "truncated header", |e| matches!(e, NnError::TruncatedBlob(_)))?;

    let header_len = u32::from_le_bytes(last[4..8].try_into().unwrap()) as usize;
    let header = String::from_utf8(last[8..8 + header_len].to_vec()).unwrap();
    let schema = codestyle_core::style::SCHEMA_VERSION;
    let stale = schema.chars().rev().collect::<String>();
    let mut wrong_schema = last[..8].to_vec();
    wrong_schema.extend_from_slice(header.replacen(schema, &stale, 1).as_bytes());
    wrong_schema.extend_from_slice(&last[8 + header_len..]);
    expect_err(&wrong_schema, "schema mismatch", |e| matches!(e, NnError::SchemaVersionMismatch(_)))?;

    let mut garbled = last.clone();
    garbled[8] = b'!';
    expect_err(&garbled, "garbled header", |e| matches!(e, NnError::BadHeader(_)))?;
    let mut trailing = last.clone();
    trailing.extend_from_slice(&[0, 0, 0, 0]);
    expect_err(&trailing, "trailing bytes", |e| matches!(e, NnError::BadHeader(_)))?;
    Ok("10 models reload bit-identical; 6 corruptions rejected with the right error".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("golden style vectors", golden_vectors),
        ("determinism", determinism),
        ("InfoNCE analytic values", info_nce_checks),
        ("gradient checks", gradient_checks),
        ("desk-scale contrastive learning", desk_training),
        ("metric identities", metric_identities),
        ("style-loss behavior", style_loss_behavior),
        ("corpus filter", corpus_filter),
        ("checkpoint round-trip", checkpoint_round_trip),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL  {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

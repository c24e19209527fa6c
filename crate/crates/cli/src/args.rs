use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "codestyle", version, about = "Python code stylometry, style metrics and contrastive style encoders")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalFlags,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. All are optional so a config file
/// can fill the gaps; anything given on the command line wins.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalFlags {
    /// Emit a single JSON document on stdout and JSON errors on stderr
    #[arg(long, global = true)]
    pub json: bool,
    /// Emit CSV on stdout where the subcommand supports it
    #[arg(long, global = true)]
    pub csv: bool,
    /// Seed for every random choice
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Recover from unparsable regions instead of failing
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Corpus length cap in tokens
    #[arg(long, global = true, value_name = "N")]
    pub max_tokens: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub epochs: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub batch: Option<usize>,
    /// InfoNCE temperature
    #[arg(long, global = true, value_name = "TAU", allow_negative_numbers = true)]
    pub temp: Option<f64>,
    /// Weight of the style term in the total loss
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Output path
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// key=value file supplying defaults for the flags above
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the 34-feature style vector of files or directories
    Analyze {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Naming-style similarity of two files
    Css { a: PathBuf, b: PathBuf },
    /// Per-feature delta table of two files, grouped by dimension
    Diff { a: PathBuf, b: PathBuf },
    /// Full metric report of a candidate against a reference
    Score {
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Style target file; defaults to the reference
        #[arg(long)]
        target: Option<PathBuf>,
        /// Cross-entropy term; when given, the report includes total_loss
        #[arg(long, allow_negative_numbers = true)]
        ce: Option<f64>,
    },
    /// Extract anchor/positive training pairs
    Pairs(PairsArgs),
    /// Train the style and code towers contrastively
    Train(TrainArgs),
    /// Embed files with a trained checkpoint
    Embed {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Tower::Style)]
        tower: Tower,
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Code-to-style retrieval recall on a pairs file
    EvalRetrieval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        /// Cutoffs, comma separated
        #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
        k: Vec<usize>,
    },
    /// Filter, deduplicate and split a code-pair corpus
    Corpus(CorpusArgs),
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    /// Python files or directories
    pub paths: Vec<PathBuf>,
    /// Use N generated files from the three built-in style archetypes
    #[arg(long, value_name = "N", conflicts_with = "paths")]
    pub synthetic: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub max_pairs_per_file: usize,
    #[arg(long, default_value_t = 3)]
    pub min_lines: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Pairs JSONL produced by `pairs`
    #[arg(long)]
    pub pairs: PathBuf,
    /// Embedding width of both towers
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Average both retrieval directions in the loss
    #[arg(long)]
    pub symmetric: bool,
    /// Hold out this share of files and report retrieval on them
    #[arg(long, default_value_t = 0.0)]
    pub heldout: f64,
    /// Per-epoch CSV log
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// JSONL files, or directories of Python files
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// Train and valid shares, e.g. 0.8,0.1; the rest is test
    #[arg(long, value_delimiter = ',')]
    pub split: Option<Vec<f64>>,
    /// Attach style vectors to every kept record
    #[arg(long)]
    pub styles: bool,
    /// Manifest path; defaults to <out>.manifest.json
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tower {
    Style,
    Code,
}

/// Flags after merging the config file.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub json: bool,
    pub csv: bool,
    pub seed: u64,
    pub lenient: bool,
    pub max_tokens: Option<usize>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub temp: Option<f64>,
    pub lambda: Option<f64>,
    pub out: Option<PathBuf>,
}

const KEYS: [&str; 10] = ["json", "csv", "seed", "lenient", "max-tokens", "epochs", "batch", "temp", "lambda", "out"];

/// `key = value` lines; `#` starts a comment. Keys use flag spelling,
/// with `_` accepted for `-`.
pub fn parse_config(text: &str, origin: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("{}:{}: expected key = value", origin.display(), n + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::usage(format!("{}:{}: unknown key `{key}`", origin.display(), n + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn value<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    map.get(key).map(|v| v.parse().map_err(|_| CliError::usage(format!("config: bad value `{v}` for `{key}`")))).transpose()
}

impl Settings {
    pub fn resolve(flags: &GlobalFlags) -> Result<Self, CliError> {
        let map = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                parse_config(&text, path)?
            }
            None => BTreeMap::new(),
        };
        Ok(Settings {
            json: flags.json || value(&map, "json")?.unwrap_or(false),
            csv: flags.csv || value(&map, "csv")?.unwrap_or(false),
            seed: flags.seed.or(value(&map, "seed")?).unwrap_or(0),
            lenient: flags.lenient || value(&map, "lenient")?.unwrap_or(false),
            max_tokens: flags.max_tokens.or(value(&map, "max-tokens")?),
            epochs: flags.epochs.or(value(&map, "epochs")?),
            batch: flags.batch.or(value(&map, "batch")?),
            temp: flags.temp.or(value(&map, "temp")?),
            lambda: flags.lambda.or(value(&map, "lambda")?),
            out: flags.out.clone().or(value(&map, "out")?),
        })
    }
}

//! Contrastive alignment of the code tower with the style tower: pair
//! construction, InfoNCE, the training loop and retrieval evaluation.

pub mod loss;
pub mod pairs;
pub mod retrieval;
pub mod sampler;
pub mod synthetic;
pub mod trainer;

use thiserror::Error;

use crate::nn::NnError;

pub use loss::{info_nce, info_nce_raw, info_nce_with_grad, NceOutput};
pub use pairs::{build_pairs, extract_snippets, ContrastivePair, PairConfig, PairSet, SkippedFile, Snippet, SnippetKind};
pub use retrieval::{embed_pairs, eval_retrieval, recall_at_k, recall_curve, split_by_file, RetrievalReport};
pub use sampler::stratified_batches;
pub use trainer::{prepare_pairs, train, write_log_csv, EpochLog, PreparedPair, TrainConfig, Trainer};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContrastiveError {
    #[error("{side} row {row} has norm {norm}, expected 1")]
    UnnormalizedInput { side: &'static str, row: usize, norm: f64 },
    #[error("embedding shapes differ: anchors {anchor:?}, positives {positive:?}")]
    ShapeMismatch { anchor: (usize, usize), positive: (usize, usize) },
    #[error("batch of {0} is too small, need at least 2")]
    BatchTooSmall(usize),
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least {needed} pairs, found {found}")]
    InsufficientPairs { needed: usize, found: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("held-out set is empty")]
    EmptyHeldout,
    #[error(transparent)]
    Nn(#[from] NnError),
}

//! Code stylometry: a 34-feature style vector for Python source, style and
//! generation metrics, and a dual-tower encoder trained contrastively to
//! align code with its style vector.

pub mod contrastive;
pub mod corpus;
pub mod lexloc;
pub mod metrics;
pub mod nn;
pub mod style;

use thiserror::Error;

pub use contrastive::{ContrastiveError, ContrastivePair, TrainConfig};
pub use corpus::{CorpusError, CorpusFile, CorpusRecord, Manifest};
pub use lexloc::{lex, lex_lenient, LexError, ParseError, ParseMode, Token, TokenKind};
pub use metrics::{bleu4, css, rouge, style_loss, MetricError, MetricReport, RougeVariant};
pub use nn::{EncoderConfig, EncoderModel, NnError};
pub use style::{
    analyze, analyze_with, normalize, StyleError, StyleVector, StyleVectorRaw, FEATURE_NAMES, SCHEMA_VERSION, STYLE_DIM,
};

/// Any error the library can raise.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Style(#[from] StyleError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Contrastive(#[from] ContrastiveError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

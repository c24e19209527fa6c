use std::fmt;

use codestyle_core::{ContrastiveError, CorpusError, MetricError, NnError, StyleError};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Usage = 1,
    Input = 2,
    Internal = 3,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Usage => "usage",
            Status::Input => "input",
            Status::Internal => "internal",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { status: Status::Usage, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        CliError { status: Status::Input, message: message.into() }
    }

    /// Prefix the message with the file or record it concerns.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({"error": self.status.label(), "code": self.status as i32, "message": self.message}).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error ({}): {}", self.status.label(), self.message)
    }
}

impl From<StyleError> for CliError {
    fn from(e: StyleError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        let status = match e {
            MetricError::InvalidLambda(_) => Status::Usage,
            MetricError::NonFinite(_) => Status::Internal,
            _ => Status::Input,
        };
        CliError { status, message: e.to_string() }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        let status = match e {
            NnError::BadMagic
            | NnError::SchemaVersionMismatch(_)
            | NnError::TruncatedBlob(_)
            | NnError::BadHeader(_)
            | NnError::Io(_)
            | NnError::EmptyTokenStream => Status::Input,
            NnError::InvalidConfig(_) => Status::Usage,
            _ => Status::Internal,
        };
        CliError { status, message: e.to_string() }
    }
}

impl From<ContrastiveError> for CliError {
    fn from(e: ContrastiveError) -> Self {
        let status = match &e {
            ContrastiveError::InvalidTemperature(_) | ContrastiveError::BatchTooSmall(_) | ContrastiveError::InvalidConfig(_) => {
                Status::Usage
            }
            ContrastiveError::InsufficientPairs { .. } | ContrastiveError::EmptyHeldout => Status::Input,
            ContrastiveError::Nn(inner) => return inner.clone().into(),
            _ => Status::Internal,
        };
        CliError { status, message: e.to_string() }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        let status = match e {
            CorpusError::RatioError(_) => Status::Usage,
            _ => Status::Input,
        };
        CliError { status, message: e.to_string() }
    }
}

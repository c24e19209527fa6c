//! Minimal neural substrate: dense kernels, the style and code towers with
//! hand-written backward passes, Adam, and the checkpoint format.

mod adam;
pub mod checkpoint;
mod code_tower;
mod dense;
mod style_tower;
pub mod tensor;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{load, save, CheckpointHeader, TensorEntry, MAGIC};
pub use code_tower::{fnv1a, token_features, CodeCache, CodeInput, CodeTower, CodeTowerConfig};
pub use dense::Dense;
pub use style_tower::{StyleCache, StyleTower, StyleTowerConfig};
pub use tensor::{Matrix, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("expected input width {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expected shape {expected:?}, got {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("token stream has no featurizable tokens")]
    EmptyTokenStream,
    #[error("non-finite gradient in tensor `{tensor}`")]
    NonFiniteGradient { tensor: String },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("checkpoint schema mismatch: {0}")]
    SchemaVersionMismatch(String),
    #[error("checkpoint truncated in `{0}`")]
    TruncatedBlob(String),
    #[error("malformed checkpoint header: {0}")]
    BadHeader(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for NnError {
    fn from(e: std::io::Error) -> Self {
        NnError::Io(e.to_string())
    }
}

pub struct TensorRef<'a, T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [T],
}

pub struct TensorMut<'a, T> {
    pub name: String,
    pub data: &'a mut [T],
}

/// Named parameter tensors in a fixed declaration order. Gradient
/// containers are models of the same shape, so both sides list
/// identically.
pub trait Parameters<T> {
    fn tensors(&self) -> Vec<TensorRef<'_, T>>;
    fn tensors_mut(&mut self) -> Vec<TensorMut<'_, T>>;

    fn param_len(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct EncoderConfig {
    pub style: StyleTowerConfig,
    pub code: CodeTowerConfig,
}

/// Both towers trained jointly by the contrastive objective.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel<T = f32> {
    pub style: StyleTower<T>,
    pub code: CodeTower<T>,
}

impl<T: Scalar> EncoderModel<T> {
    /// Seeded init: the style tower draws first, then the code tower.
    pub fn init(config: EncoderConfig, seed: u64) -> Result<Self, NnError> {
        if config.style.output_dim() != config.code.output {
            return Err(NnError::InvalidConfig(format!(
                "tower output widths differ: {} vs {}",
                config.style.output_dim(),
                config.code.output
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let style = StyleTower::init_with(config.style, &mut rng)?;
        let code = CodeTower::init_with(config.code, &mut rng)?;
        Ok(EncoderModel { style, code })
    }

    pub fn zeros_like(&self) -> Self {
        EncoderModel { style: self.style.zeros_like(), code: self.code.zeros_like() }
    }

    pub fn config(&self) -> EncoderConfig {
        EncoderConfig { style: self.style.config.clone(), code: self.code.config.clone() }
    }

    pub fn embedding_dim(&self) -> usize {
        self.style.config.output_dim()
    }

    pub fn cast<U: Scalar>(&self) -> EncoderModel<U> {
        EncoderModel { style: self.style.cast(), code: self.code.cast() }
    }
}

impl<T: Scalar> Parameters<T> for EncoderModel<T> {
    fn tensors(&self) -> Vec<TensorRef<'_, T>> {
        let mut v = self.style.tensors();
        v.extend(self.code.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_, T>> {
        let mut v = self.style.tensors_mut();
        v.extend(self.code.tensors_mut());
        v
    }
}

/// Scale a vector to unit L2 norm; the zero vector stays zero.
pub fn l2_normalize<T: Scalar>(v: &[T]) -> Vec<T> {
    let norm = tensor::dot(v, v).sqrt();
    if norm == T::zero() {
        return v.to_vec();
    }
    v.iter().map(|x| *x / norm).collect()
}

pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    let denom = (tensor::dot(a, a) * tensor::dot(b, b)).sqrt();
    if denom == T::zero() {
        T::zero()
    } else {
        tensor::dot(a, b) / denom
    }
}

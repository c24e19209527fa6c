use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::Dense;
use super::tensor::{axpy, relu_backward_inplace, relu_inplace, Matrix, Scalar};
use super::{NnError, Parameters, TensorMut, TensorRef};
use crate::lexloc::{Token, TokenKind};
use crate::style::classify_identifier;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeTowerConfig {
    pub buckets: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub output: usize,
    pub hash_seed: u64,
}

impl Default for CodeTowerConfig {
    fn default() -> Self {
        CodeTowerConfig { buckets: 8192, embed_dim: 128, hidden: 512, output: 1024, hash_seed: 0x5eed_c0de }
    }
}

impl CodeTowerConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if [self.buckets, self.embed_dim, self.hidden, self.output].contains(&0) {
            return Err(NnError::InvalidConfig(format!("code tower widths must be non-zero: {self:?}")));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.buckets * self.embed_dim
            + Dense::<f32>::param_count(self.embed_dim, self.hidden)
            + Dense::<f32>::param_count(self.hidden, self.output)
    }
}

/// Seeded 64-bit FNV-1a.
pub fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(PRIME);
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Hashed features of a single token. Features depend on the token alone,
/// so pooling over them is order-free. Identifier text itself is left out:
/// it is content, and hashing it lets the tower memorize files by name.
pub fn token_features(t: &Token) -> Vec<String> {
    let bucket = |n: usize, step: usize, cap: usize| (n / step).min(cap);
    match t.kind {
        TokenKind::Newline | TokenKind::Dedent => Vec::new(),
        TokenKind::Indent => vec![format!("indent:{}", t.col)],
        TokenKind::Identifier => {
            let rec = classify_identifier(&t.text);
            vec![
                format!("case:{:?}", rec.category),
                format!("len:{}", t.text.chars().count().min(24)),
                format!("underscores:{}", t.text.matches('_').count().min(4)),
            ]
        }
        TokenKind::Keyword => vec![format!("kw:{}", t.text)],
        TokenKind::Operator | TokenKind::Punct => vec![format!("op:{}", t.text)],
        TokenKind::Number => vec!["num".into(), format!("num:{}", t.text.chars().count().min(6))],
        TokenKind::String => {
            let body = t.text.trim_start_matches(|c: char| c.is_ascii_alphabetic());
            let quote = if body.starts_with("\"\"\"") || body.starts_with("'''") { "triple" } else { "single" };
            vec![format!("str:{quote}"), format!("strlen:{}", bucket(t.text.chars().count(), 8, 16))]
        }
        TokenKind::Comment => vec![
            "comment".into(),
            format!("commentlen:{}", bucket(t.text.chars().count(), 8, 16)),
            format!("commentcol:{}", bucket(t.col, 4, 10)),
        ],
    }
}

/// Mean-pooled bag of hashed features: `(bucket, weight)` sorted by bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeInput<T> {
    pub bag: Vec<(u32, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeTower<T> {
    pub config: CodeTowerConfig,
    /// `[buckets × embed_dim]`.
    pub table: Matrix<T>,
    pub hidden: Dense<T>,
    pub out: Dense<T>,
}

#[derive(Debug, Clone)]
pub struct CodeCache<T> {
    pub inputs: Vec<CodeInput<T>>,
    pub pooled: Matrix<T>,
    pub hidden: Matrix<T>,
}

impl<T: Scalar> CodeTower<T> {
    pub fn zeros(config: CodeTowerConfig) -> Result<Self, NnError> {
        config.validate()?;
        Ok(CodeTower {
            table: Matrix::zeros(config.buckets, config.embed_dim),
            hidden: Dense::zeros(config.embed_dim, config.hidden),
            out: Dense::zeros(config.hidden, config.output),
            config,
        })
    }

    pub fn init(config: CodeTowerConfig, seed: u64) -> Result<Self, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with(config, &mut rng)
    }

    /// Table entries are uniform with unit variance; dense layers use
    /// fan-in scaling.
    pub fn init_with(config: CodeTowerConfig, rng: &mut ChaCha8Rng) -> Result<Self, NnError> {
        config.validate()?;
        let bound = 3f64.sqrt();
        let data = (0..config.buckets * config.embed_dim).map(|_| T::from_f64(rng.gen_range(-bound..bound))).collect();
        Ok(CodeTower {
            table: Matrix::from_vec(config.buckets, config.embed_dim, data),
            hidden: Dense::kaiming(config.embed_dim, config.hidden, rng),
            out: Dense::kaiming(config.hidden, config.output, rng),
            config,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config.clone()).expect("config already validated")
    }

    pub fn encode(&self, tokens: &[Token]) -> Result<CodeInput<T>, NnError> {
        let mut counts = std::collections::BTreeMap::<u32, usize>::new();
        let mut total = 0usize;
        for t in tokens {
            for f in token_features(t) {
                let h = fnv1a(self.config.hash_seed, f.as_bytes()) % self.config.buckets as u64;
                *counts.entry(h as u32).or_default() += 1;
                total += 1;
            }
        }
        if total == 0 {
            return Err(NnError::EmptyTokenStream);
        }
        // a direct ratio keeps weights exact under scaling of all counts
        Ok(CodeInput { bag: counts.into_iter().map(|(b, c)| (b, T::from_f64(c as f64 / total as f64))).collect() })
    }

    pub fn forward_tokens(&self, tokens: &[Token]) -> Result<Vec<T>, NnError> {
        let input = self.encode(tokens)?;
        Ok(self.forward_cached(std::slice::from_ref(&input))?.0.data)
    }

    pub fn forward_cached(&self, inputs: &[CodeInput<T>]) -> Result<(Matrix<T>, CodeCache<T>), NnError> {
        let mut pooled = Matrix::zeros(inputs.len(), self.config.embed_dim);
        for (r, input) in inputs.iter().enumerate() {
            if input.bag.is_empty() {
                return Err(NnError::EmptyTokenStream);
            }
            let row = pooled.row_mut(r);
            for &(b, w) in &input.bag {
                let b = b as usize;
                if b >= self.config.buckets {
                    return Err(NnError::DimensionMismatch { expected: self.config.buckets, found: b + 1 });
                }
                axpy(w, self.table.row(b), row);
            }
        }
        let mut hidden = self.hidden.forward(&pooled);
        relu_inplace(&mut hidden);
        let out = self.out.forward(&hidden);
        Ok((out, CodeCache { inputs: inputs.to_vec(), pooled, hidden }))
    }

    pub fn backward(&self, cache: &CodeCache<T>, d_out: &Matrix<T>) -> Result<Self, NnError> {
        if d_out.shape() != (cache.hidden.rows, self.config.output) {
            return Err(NnError::ShapeMismatch {
                expected: vec![cache.hidden.rows, self.config.output],
                found: vec![d_out.rows, d_out.cols],
            });
        }
        let mut grads = self.zeros_like();
        let mut dh = self.out.backward(&cache.hidden, d_out, &mut grads.out, true).expect("input gradient");
        relu_backward_inplace(&mut dh, &cache.hidden);
        let dp = self.hidden.backward(&cache.pooled, &dh, &mut grads.hidden, true).expect("input gradient");
        for (r, input) in cache.inputs.iter().enumerate() {
            for &(b, w) in &input.bag {
                axpy(w, dp.row(r), grads.table.row_mut(b as usize));
            }
        }
        Ok(grads)
    }

    pub fn cast<U: Scalar>(&self) -> CodeTower<U> {
        CodeTower { config: self.config.clone(), table: self.table.cast(), hidden: self.hidden.cast(), out: self.out.cast() }
    }
}

impl<T: Scalar> CodeInput<T> {
    pub fn cast<U: Scalar>(&self) -> CodeInput<U> {
        CodeInput { bag: self.bag.iter().map(|(b, w)| (*b, U::from_f64(w.as_f64()))).collect() }
    }
}

impl<T: Scalar> Parameters<T> for CodeTower<T> {
    fn tensors(&self) -> Vec<TensorRef<'_, T>> {
        vec![
            TensorRef { name: "code.table".into(), shape: vec![self.table.rows, self.table.cols], data: &self.table.data },
            TensorRef {
                name: "code.hidden.w".into(),
                shape: vec![self.hidden.w.rows, self.hidden.w.cols],
                data: &self.hidden.w.data,
            },
            TensorRef { name: "code.hidden.b".into(), shape: vec![self.hidden.b.len()], data: &self.hidden.b },
            TensorRef { name: "code.out.w".into(), shape: vec![self.out.w.rows, self.out.w.cols], data: &self.out.w.data },
            TensorRef { name: "code.out.b".into(), shape: vec![self.out.b.len()], data: &self.out.b },
        ]
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_, T>> {
        vec![
            TensorMut { name: "code.table".into(), data: &mut self.table.data },
            TensorMut { name: "code.hidden.w".into(), data: &mut self.hidden.w.data },
            TensorMut { name: "code.hidden.b".into(), data: &mut self.hidden.b },
            TensorMut { name: "code.out.w".into(), data: &mut self.out.w.data },
            TensorMut { name: "code.out.b".into(), data: &mut self.out.b },
        ]
    }
}

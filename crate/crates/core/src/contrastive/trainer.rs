use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lexloc::{lex_lenient, ParseMode};
use crate::nn::{Adam, AdamConfig, CodeInput, EncoderConfig, EncoderModel, Matrix, Parameters};
use crate::style::{analyze_with, normalize, STYLE_DIM};

use super::loss::info_nce_raw;
use super::pairs::ContrastivePair;
use super::sampler::stratified_batches;
use super::ContrastiveError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub temperature: f64,
    pub embedding_dim: usize,
    pub lr: f64,
    pub seed: u64,
    pub symmetric_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            temperature: 0.07,
            embedding_dim: 1024,
            lr: 1e-3,
            seed: 0,
            symmetric_loss: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ContrastiveError> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(ContrastiveError::InvalidTemperature(self.temperature));
        }
        if self.batch_size < 2 {
            return Err(ContrastiveError::BatchTooSmall(self.batch_size));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || self.embedding_dim == 0 {
            return Err(ContrastiveError::InvalidConfig(format!("lr {} / embedding_dim {}", self.lr, self.embedding_dim)));
        }
        Ok(())
    }

    /// Default tower shapes with both outputs set to `embedding_dim`.
    pub fn encoder_config(&self) -> EncoderConfig {
        let mut cfg = EncoderConfig::default();
        *cfg.style.dims.last_mut().unwrap() = self.embedding_dim;
        cfg.code.output = self.embedding_dim;
        cfg
    }
}

/// A pair with both sides already featurized for the towers.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    pub id: String,
    pub file_id: String,
    pub code: CodeInput<f32>,
    pub style: [f32; STYLE_DIM],
}

/// Featurize pairs; pairs whose anchor has no tokens or whose positive
/// cannot be analyzed come back as `(id, reason)`.
pub fn prepare_pairs(model: &EncoderModel<f32>, pairs: &[ContrastivePair]) -> (Vec<PreparedPair>, Vec<(String, String)>) {
    let mut ok = Vec::with_capacity(pairs.len());
    let mut failed = Vec::new();
    for p in pairs {
        let code = model.code.encode(&lex_lenient(&p.anchor_code));
        let style = analyze_with(&p.positive_source, ParseMode::Lenient);
        match (code, style) {
            (Ok(code), Ok(a)) => {
                ok.push(PreparedPair { id: p.id.clone(), file_id: p.file_id.clone(), code, style: normalize(&a.raw).as_f32() })
            }
            (Err(e), _) => failed.push((p.id.clone(), e.to_string())),
            (_, Err(e)) => failed.push((p.id.clone(), e.to_string())),
        }
    }
    (ok, failed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub wall_ms: u128,
}

pub fn write_log_csv<W: Write>(log: &[EpochLog], mut w: W) -> std::io::Result<()> {
    writeln!(w, "epoch,mean_loss,wall_ms")?;
    for e in log {
        writeln!(w, "{},{},{}", e.epoch, e.mean_loss, e.wall_ms)?;
    }
    Ok(())
}

pub struct Trainer {
    pub config: TrainConfig,
    pub model: EncoderModel<f32>,
    adam: Adam<f32>,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self, ContrastiveError> {
        config.validate()?;
        let model = EncoderModel::init(config.encoder_config(), config.seed)?;
        Self::with_model(config, model)
    }

    pub fn with_model(config: TrainConfig, model: EncoderModel<f32>) -> Result<Self, ContrastiveError> {
        config.validate()?;
        // the sampler stream is separate from the init stream
        let rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
        Ok(Trainer { config, model, adam: Adam::new(AdamConfig::default()), rng })
    }

    /// One optimizer step on a batch; returns the batch loss.
    pub fn step(&mut self, batch: &[&PreparedPair]) -> Result<f64, ContrastiveError> {
        let inputs: Vec<CodeInput<f32>> = batch.iter().map(|p| p.code.clone()).collect();
        let styles = Matrix::from_vec(batch.len(), STYLE_DIM, batch.iter().flat_map(|p| p.style).collect());
        let (code_emb, code_cache) = self.model.code.forward_cached(&inputs)?;
        let (style_emb, style_cache) = self.model.style.forward_cached(&styles)?;
        let out = info_nce_raw(&code_emb, &style_emb, self.config.temperature, self.config.symmetric_loss)?;
        let loss = out.loss as f64;
        if !loss.is_finite() {
            return Err(ContrastiveError::NonFiniteLoss { epoch: 0, batch: 0 });
        }
        let code = self.model.code.backward(&code_cache, &out.d_anchor)?;
        let (style, _) = self.model.style.backward(&style_cache, &out.d_positive)?;
        let grads = EncoderModel { style, code };
        self.adam.update(&mut self.model, &grads, self.config.lr)?;
        Ok(loss)
    }

    pub fn train_epoch(&mut self, pairs: &[PreparedPair], epoch: usize) -> Result<EpochLog, ContrastiveError> {
        let start = Instant::now();
        let files: Vec<&str> = pairs.iter().map(|p| p.file_id.as_str()).collect();
        let batches = stratified_batches(&files, self.config.batch_size, &mut self.rng);
        if batches.is_empty() {
            return Err(ContrastiveError::InsufficientPairs { needed: self.config.batch_size, found: pairs.len() });
        }
        let mut total = 0.0;
        for (b, idx) in batches.iter().enumerate() {
            let batch: Vec<&PreparedPair> = idx.iter().map(|&i| &pairs[i]).collect();
            total += self.step(&batch).map_err(|e| match e {
                ContrastiveError::NonFiniteLoss { .. } => ContrastiveError::NonFiniteLoss { epoch, batch: b },
                other => other,
            })?;
        }
        Ok(EpochLog { epoch, mean_loss: total / batches.len() as f64, wall_ms: start.elapsed().as_millis() })
    }

    /// Run every configured epoch; `on_epoch` sees each log row as it lands.
    pub fn train(
        &mut self,
        pairs: &[PreparedPair],
        mut on_epoch: impl FnMut(&EpochLog),
    ) -> Result<Vec<EpochLog>, ContrastiveError> {
        if pairs.len() < self.config.batch_size {
            return Err(ContrastiveError::InsufficientPairs { needed: self.config.batch_size, found: pairs.len() });
        }
        let mut log = Vec::with_capacity(self.config.epochs);
        for epoch in 1..=self.config.epochs {
            let row = self.train_epoch(pairs, epoch)?;
            on_epoch(&row);
            log.push(row);
        }
        Ok(log)
    }

    pub fn param_count(&self) -> usize {
        self.model.param_len()
    }
}

/// Featurize, train and return the model with its epoch log.
pub fn train(pairs: &[ContrastivePair], config: TrainConfig) -> Result<(EncoderModel<f32>, Vec<EpochLog>), ContrastiveError> {
    let mut trainer = Trainer::new(config)?;
    let (prepared, _) = prepare_pairs(&trainer.model, pairs);
    let log = trainer.train(&prepared, |_| {})?;
    Ok((trainer.model, log))
}

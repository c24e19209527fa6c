//! Checkpoint byte layout:
//!
//! ```text
//! "S2C1" | header length (u32 LE) | header JSON | f32 LE blobs
//! ```
//!
//! The header names every tensor with its shape; blobs follow in that
//! order with no padding. Caps and schema tag must match the running
//! analyzer, since the style tower is only meaningful on vectors
//! normalized the same way.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EncoderConfig, EncoderModel, NnError, Parameters};
use crate::style::{NORMALIZATION_CAPS, SCHEMA_VERSION};

pub const MAGIC: &[u8; 4] = b"S2C1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub schema: String,
    pub dims: EncoderConfig,
    pub hash_seed: u64,
    pub caps: Vec<(String, f64)>,
    pub tensors: Vec<TensorEntry>,
}

fn current_caps() -> Vec<(String, f64)> {
    NORMALIZATION_CAPS.iter().map(|(n, c)| (n.to_string(), *c)).collect()
}

pub fn to_bytes(model: &EncoderModel<f32>) -> Vec<u8> {
    let tensors = model.tensors();
    let header = CheckpointHeader {
        schema: SCHEMA_VERSION.to_string(),
        dims: model.config(),
        hash_seed: model.code.config.hash_seed,
        caps: current_caps(),
        tensors: tensors.iter().map(|t| TensorEntry { name: t.name.clone(), shape: t.shape.clone() }).collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(8 + json.len() + 4 * model.param_len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for t in &tensors {
        for v in t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<EncoderModel<f32>, NnError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(NnError::BadMagic);
    }
    let len_bytes: [u8; 4] = bytes.get(4..8).ok_or_else(|| NnError::TruncatedBlob("header".into()))?.try_into().unwrap();
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let json = bytes.get(8..8 + header_len).ok_or_else(|| NnError::TruncatedBlob("header".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(json).map_err(|e| NnError::BadHeader(e.to_string()))?;
    if header.schema != SCHEMA_VERSION {
        return Err(NnError::SchemaVersionMismatch(format!("schema `{}`, expected `{SCHEMA_VERSION}`", header.schema)));
    }
    if header.caps != current_caps() {
        return Err(NnError::SchemaVersionMismatch("normalization caps differ from the analyzer's".into()));
    }
    if header.hash_seed != header.dims.code.hash_seed {
        return Err(NnError::BadHeader("hash seed disagrees with code tower config".into()));
    }
    let mut model = EncoderModel {
        style: super::StyleTower::zeros(header.dims.style.clone())?,
        code: super::CodeTower::zeros(header.dims.code.clone())?,
    };
    let expected: Vec<TensorEntry> =
        model.tensors().iter().map(|t| TensorEntry { name: t.name.clone(), shape: t.shape.clone() }).collect();
    if expected != header.tensors {
        return Err(NnError::BadHeader("tensor list does not match the declared dims".into()));
    }
    let mut pos = 8 + header_len;
    for t in model.tensors_mut() {
        let n = t.data.len() * 4;
        let blob = bytes.get(pos..pos + n).ok_or_else(|| NnError::TruncatedBlob(t.name.clone()))?;
        for (v, chunk) in t.data.iter_mut().zip(blob.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().unwrap());
        }
        pos += n;
    }
    if pos != bytes.len() {
        return Err(NnError::BadHeader(format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok(model)
}

pub fn save(model: &EncoderModel<f32>, path: impl AsRef<Path>) -> Result<(), NnError> {
    std::fs::write(path, to_bytes(model))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<EncoderModel<f32>, NnError> {
    from_bytes(&std::fs::read(path)?)
}

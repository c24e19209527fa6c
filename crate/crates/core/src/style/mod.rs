//! The 34-dimensional explicit style vector.
//!
//! Slots are grouped naming `[0, 14)`, layout `[14, 23)`, structural
//! `[23, 34)`; names and order live in [`registry`].

mod layout;
mod naming;
pub mod registry;
mod structural;

use std::fmt::Write as _;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::lexloc::{
    functions_from_tokens, lex, lex_lenient, line_profile_with_tokens, normalize_newlines, parse_statements, split_lines,
    FunctionInfo, ParseError, ParseMode,
};

pub use layout::{layout_features, space_pattern, PATTERN_COLS, PATTERN_ROWS};
pub use naming::{binding_identifiers, classify_identifier, naming_features, IdentifierRecord, NameCategory};
pub use registry::{
    cap_for, feature_index, FeatureGroup, FEATURE_NAMES, LAYOUT, NAMING, NORMALIZATION_CAPS, SCHEMA_VERSION, STRUCTURAL,
    STYLE_DIM,
};
pub use structural::{redundancy_ratio, structural_features, FunctionRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StyleError {
    #[error("source is empty after stripping whitespace")]
    EmptySource,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("normalized component {index} = {value} is outside [0, 1]")]
    OutOfRange { index: usize, value: String },
    #[error("expected {expected} style components, got {found}")]
    WrongLength { expected: usize, found: usize },
}

impl From<crate::lexloc::LexError> for StyleError {
    fn from(e: crate::lexloc::LexError) -> Self {
        StyleError::Parse(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StyleWarning {
    /// No binding-site identifiers; the naming block is all zeros.
    EmptyIdentifierSet,
}

/// Raw features in natural units (chars, counts, ratios).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StyleVectorRaw {
    pub values: [f64; STYLE_DIM],
}

impl StyleVectorRaw {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        FEATURE_NAMES.iter().copied().zip(self.values.iter().copied())
    }

    pub fn group(&self, group: FeatureGroup) -> &[f64] {
        &self.values[group.range()]
    }
}

impl Serialize for StyleVectorRaw {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(STYLE_DIM))?;
        for (name, v) in self.named() {
            map.serialize_entry(name, &v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for StyleVectorRaw {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = std::collections::HashMap::<String, f64>::deserialize(d)?;
        let mut values = [0.0; STYLE_DIM];
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            values[i] = *map.get(*name).ok_or_else(|| D::Error::custom(format!("missing feature `{name}`")))?;
        }
        if map.len() != STYLE_DIM {
            return Err(D::Error::custom("unknown style feature name"));
        }
        Ok(StyleVectorRaw { values })
    }
}

/// Normalized features, each in `[0, 1]`, tagged with the schema version.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleVector {
    pub values: [f64; STYLE_DIM],
    pub schema: String,
}

impl StyleVector {
    /// Wrap already-normalized values; every component must lie in `[0, 1]`.
    pub fn new(values: [f64; STYLE_DIM]) -> Result<Self, StyleError> {
        if let Some((index, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(StyleError::OutOfRange { index, value: v.to_string() });
        }
        Ok(StyleVector { values, schema: SCHEMA_VERSION.to_string() })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self, StyleError> {
        let arr: [f64; STYLE_DIM] =
            values.try_into().map_err(|_| StyleError::WrongLength { expected: STYLE_DIM, found: values.len() })?;
        Self::new(arr)
    }

    pub fn zeros() -> Self {
        StyleVector { values: [0.0; STYLE_DIM], schema: SCHEMA_VERSION.to_string() }
    }

    pub fn naming(&self) -> &[f64] {
        &self.values[registry::NAMING]
    }

    pub fn as_f32(&self) -> [f32; STYLE_DIM] {
        self.values.map(|v| v as f32)
    }
}

impl Serialize for StyleVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("schema", &self.schema)?;
        map.serialize_entry("values", &self.values[..])?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for StyleVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            schema: String,
            values: Vec<f64>,
        }
        let w = Wire::deserialize(d)?;
        let mut v = StyleVector::from_slice(&w.values).map_err(D::Error::custom)?;
        v.schema = w.schema;
        Ok(v)
    }
}

/// Mapping into the bounded `[0, 1]` space. Normalizing a [`StyleVector`]
/// returns it unchanged, so `normalize` is idempotent by construction.
pub trait Normalize {
    fn normalize(&self) -> StyleVector;
}

impl Normalize for StyleVectorRaw {
    fn normalize(&self) -> StyleVector {
        let mut values = self.values;
        for (i, v) in values.iter_mut().enumerate() {
            *v = match cap_for(i) {
                Some(c) => (*v / c).min(1.0),
                None => *v,
            }
            .clamp(0.0, 1.0);
        }
        StyleVector { values, schema: SCHEMA_VERSION.to_string() }
    }
}

impl Normalize for StyleVector {
    fn normalize(&self) -> StyleVector {
        self.clone()
    }
}

pub fn normalize<N: Normalize + ?Sized>(x: &N) -> StyleVector {
    x.normalize()
}

/// Everything computed while analyzing one file.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub raw: StyleVectorRaw,
    pub identifiers: Vec<IdentifierRecord>,
    pub functions: Vec<FunctionInfo>,
    pub warnings: Vec<StyleWarning>,
}

/// Strict analysis: lexing and unsupported-construct errors propagate.
pub fn analyze(source: &str) -> Result<StyleVectorRaw, StyleError> {
    analyze_with(source, ParseMode::Strict).map(|a| a.raw)
}

pub fn analyze_with(source: &str, mode: ParseMode) -> Result<Analysis, StyleError> {
    if source.trim().is_empty() {
        return Err(StyleError::EmptySource);
    }
    let source = normalize_newlines(source);
    let tokens = match mode {
        ParseMode::Strict => lex(&source)?,
        ParseMode::Lenient => lex_lenient(&source),
    };
    let stmts = parse_statements(&tokens, mode)?;
    let functions = functions_from_tokens(&tokens, mode)?;
    let profile = line_profile_with_tokens(&source, &tokens);

    let identifiers: Vec<IdentifierRecord> =
        binding_identifiers(&stmts, &functions).iter().map(|n| classify_identifier(n)).collect();
    let mut warnings = Vec::new();
    if identifiers.is_empty() {
        warnings.push(StyleWarning::EmptyIdentifierSet);
    }

    let records: Vec<FunctionRecord> = if functions.is_empty() {
        vec![FunctionRecord::module(&stmts)]
    } else {
        functions.iter().map(FunctionRecord::from).collect()
    };
    let redundancy = redundancy_ratio(&split_lines(&source), &profile);

    let mut values = [0.0; STYLE_DIM];
    values[registry::NAMING].copy_from_slice(&naming_features(&identifiers, &source));
    values[registry::LAYOUT].copy_from_slice(&layout_features(&source, &profile, &tokens, &functions));
    values[registry::STRUCTURAL].copy_from_slice(&structural_features(&records, redundancy));

    Ok(Analysis { raw: StyleVectorRaw { values }, identifiers, functions, warnings })
}

/// The `{"schema", "raw", "normalized"}` document for one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleReport {
    pub schema: String,
    pub raw: StyleVectorRaw,
    pub normalized: Vec<f64>,
}

impl StyleReport {
    pub fn new(raw: StyleVectorRaw) -> Self {
        StyleReport { schema: SCHEMA_VERSION.to_string(), normalized: raw.normalize().values.to_vec(), raw }
    }
}

pub fn csv_header() -> String {
    FEATURE_NAMES.join(",")
}

pub fn csv_row(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ADD: &str = "def add_nums(a, b):\n    return a + b\n";

    #[test]
    fn add_nums_spot_values() {
        let raw = analyze(ADD).unwrap();
        assert_eq!(raw.get("arg_count"), Some(2.0));
        assert_eq!(raw.get("return_count"), Some(1.0));
        assert_eq!(raw.get("length"), Some(1.0));
        assert_eq!(raw.get("control_structures"), Some(0.0));
        assert_eq!(raw.get("indentation_level_avg"), Some(0.5));
        assert_eq!(raw.get("space_before_operator"), Some(1.0));
        assert_eq!(raw.get("blank_line_count"), Some(0.0));
    }

    #[test]
    fn empty_source() {
        assert_eq!(analyze("  \n\t\n").unwrap_err(), StyleError::EmptySource);
    }

    #[test]
    fn normalize_caps_and_idempotence() {
        let mut raw = StyleVectorRaw { values: [0.0; STYLE_DIM] };
        raw.values[0] = 3.333;
        raw.values[feature_index("length").unwrap()] = 250.0;
        let n = raw.normalize();
        assert!((n.values[0] - 0.1111).abs() < 1e-12);
        assert_eq!(n.values[feature_index("length").unwrap()], 1.0);
        assert_eq!(normalize(&n), n);
    }

    #[test]
    fn report_json_key_order() {
        let json = serde_json::to_string(&StyleReport::new(analyze(ADD).unwrap())).unwrap();
        let mut last = 0;
        for name in FEATURE_NAMES {
            let pos = json.find(&format!("\"{name}\"")).unwrap();
            assert!(pos > last);
            last = pos;
        }
        assert!(json.starts_with("{\"schema\":\"s2c-style-v1\",\"raw\":{"));
        let back: StyleReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.raw, analyze(ADD).unwrap());
    }

    #[test]
    fn reindent_doubles_indentation_only_in_layout() {
        let two = "def f(a):\n  if a:\n    return a\n  return 0\n";
        let four = "def f(a):\n    if a:\n        return a\n    return 0\n";
        let (a, b) = (analyze(two).unwrap(), analyze(four).unwrap());
        assert_eq!(a.group(FeatureGroup::Naming), b.group(FeatureGroup::Naming));
        let i = feature_index("indentation_level_avg").unwrap();
        assert_eq!(b.values[i], 2.0 * a.values[i]);
    }

    #[test]
    fn style_vector_range_checked() {
        let mut v = [0.5; STYLE_DIM];
        assert!(StyleVector::new(v).is_ok());
        v[3] = 1.5;
        assert!(matches!(StyleVector::new(v), Err(StyleError::OutOfRange { index: 3, .. })));
        assert!(matches!(StyleVector::from_slice(&[0.0; 3]), Err(StyleError::WrongLength { .. })));
    }
}

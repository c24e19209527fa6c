//! Fixed index ↔ name registry for the 34 style features.

use std::ops::Range;

pub const STYLE_DIM: usize = 34;
pub const SCHEMA_VERSION: &str = "s2c-style-v1";

pub const NAMING: Range<usize> = 0..14;
pub const LAYOUT: Range<usize> = 14..23;
pub const STRUCTURAL: Range<usize> = 23..34;

pub const FEATURE_NAMES: [&str; STYLE_DIM] = [
    // naming
    "name_length",
    "is_snake_case",
    "style_stat_underscore_ratio",
    "style_stat_digit_ratio",
    "style_stat_symbol_ratio",
    "style_stat_uppercase_ratio",
    "style_stat_lowercase_ratio",
    "style_dist_PascalCase",
    "style_dist_snake_case",
    "style_dist_camelCase",
    "style_dist_UPPER_CASE",
    "style_dist_private",
    "style_dist_dunder_method",
    "naming_consistency",
    // layout
    "blank_line_count",
    "line_length_avg",
    "line_length_variance",
    "indentation_level_avg",
    "space_before_operator",
    "comment_ratio",
    "type_hint_ratio",
    "indentation_consistency",
    "space_pattern_code",
    // structural
    "call_depth",
    "branch_count",
    "return_count",
    "arg_count",
    "length",
    "has_docstring",
    "has_try_except",
    "exception_score",
    "redundancy_ratio",
    "annotation_ratio",
    "control_structures",
];

/// Unbounded features and the value at which they saturate to 1.0.
/// Changing any cap changes the schema.
pub const NORMALIZATION_CAPS: [(&str, f64); 10] = [
    ("name_length", 30.0),
    ("line_length_avg", 120.0),
    ("line_length_variance", 1600.0),
    ("indentation_level_avg", 8.0),
    ("call_depth", 8.0),
    ("branch_count", 10.0),
    ("return_count", 10.0),
    ("arg_count", 10.0),
    ("length", 100.0),
    ("control_structures", 20.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureGroup {
    Naming,
    Layout,
    Structural,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 3] = [FeatureGroup::Naming, FeatureGroup::Layout, FeatureGroup::Structural];

    pub fn range(self) -> Range<usize> {
        match self {
            FeatureGroup::Naming => NAMING,
            FeatureGroup::Layout => LAYOUT,
            FeatureGroup::Structural => STRUCTURAL,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureGroup::Naming => "naming",
            FeatureGroup::Layout => "layout",
            FeatureGroup::Structural => "structural",
        }
    }

    pub fn of(index: usize) -> FeatureGroup {
        match index {
            i if NAMING.contains(&i) => FeatureGroup::Naming,
            i if LAYOUT.contains(&i) => FeatureGroup::Layout,
            _ => FeatureGroup::Structural,
        }
    }
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

/// Cap for an index, `None` for ratio features.
pub fn cap_for(index: usize) -> Option<f64> {
    let name = FEATURE_NAMES.get(index)?;
    NORMALIZATION_CAPS.iter().find(|(n, _)| n == name).map(|(_, c)| *c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_total_and_unique() {
        let mut names = FEATURE_NAMES.to_vec();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), STYLE_DIM);
        assert_eq!(NAMING.len() + LAYOUT.len() + STRUCTURAL.len(), STYLE_DIM);
        for (name, _) in NORMALIZATION_CAPS {
            assert!(feature_index(name).is_some(), "{name}");
        }
    }

    #[test]
    fn group_boundaries() {
        assert_eq!(FEATURE_NAMES[NAMING.end - 1], "naming_consistency");
        assert_eq!(FEATURE_NAMES[LAYOUT.start], "blank_line_count");
        assert_eq!(FEATURE_NAMES[STRUCTURAL.start], "call_depth");
        assert_eq!(FeatureGroup::of(22), FeatureGroup::Layout);
    }
}

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;

/// Measurement scale of a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Ordinal,
    Binary,
    Nominal,
}

impl FeatureKind {
    /// Kinds whose imputed value is a mean (rather than a mode).
    pub fn is_numeric(self) -> bool {
        matches!(self, FeatureKind::Continuous | FeatureKind::Ordinal)
    }

    pub fn is_categorical(self) -> bool {
        !matches!(self, FeatureKind::Continuous)
    }
}

/// One column of a cohort.
///
/// Categorical values are stored as 0-based level indices. Binary features
/// without explicit levels take the values 0 and 1 directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
    /// Set on the binary columns produced by one-hot expansion: the nominal
    /// feature they came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dummy_of: Option<String>,
}

impl FeatureSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: FeatureKind::Continuous, levels: Vec::new(), dummy_of: None }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: FeatureKind::Binary, levels: Vec::new(), dummy_of: None }
    }

    pub fn ordinal<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Ordinal,
            levels: levels.into_iter().map(Into::into).collect(),
            dummy_of: None,
        }
    }

    pub fn nominal<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Nominal,
            levels: levels.into_iter().map(Into::into).collect(),
            dummy_of: None,
        }
    }

    /// Number of admissible categorical values, `None` for continuous features.
    pub fn level_count(&self) -> Option<usize> {
        match self.kind {
            FeatureKind::Continuous => None,
            FeatureKind::Binary => Some(2),
            FeatureKind::Ordinal | FeatureKind::Nominal => Some(self.levels.len()),
        }
    }

    /// Display name of a stored value (level name for categoricals).
    pub fn render_value(&self, value: f64) -> String {
        if self.kind.is_categorical() {
            let idx = value.round();
            if idx >= 0.0 && (idx as usize) < self.levels.len() {
                return self.levels[idx as usize].clone();
            }
        }
        format_number(value)
    }

    /// Parses one cell. Empty cells are `Ok(None)`.
    pub fn parse_cell(&self, cell: &str) -> Result<Option<f64>, String> {
        let cell = cell.trim();
        if cell.is_empty() {
            return Ok(None);
        }
        match self.kind {
            FeatureKind::Continuous => cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| format!("unparseable numeric value {cell:?}")),
            FeatureKind::Binary if self.levels.is_empty() => match cell.parse::<f64>() {
                Ok(v) if v == 0.0 || v == 1.0 => Ok(Some(v)),
                _ => Err(format!("binary value must be 0 or 1, got {cell:?}")),
            },
            _ => self
                .levels
                .iter()
                .position(|l| l == cell)
                .map(|i| Some(i as f64))
                .ok_or_else(|| format!("unknown category level {cell:?}")),
        }
    }

    /// Checks that a stored value is admissible for this feature.
    pub fn check_value(&self, value: f64) -> Result<(), String> {
        if !value.is_finite() {
            return Err(format!("non-finite value for {}", self.name));
        }
        if let Some(n) = self.level_count() {
            if value.fract() != 0.0 || value < 0.0 || value >= n as f64 {
                return Err(format!("value {value} outside the {n} levels of {}", self.name));
            }
        }
        Ok(())
    }
}

pub(crate) fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Ordered feature list plus the name of the outcome column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(rename = "feature")]
    pub features: Vec<FeatureSpec>,
}

fn default_label() -> String {
    "label".to_string()
}

impl Schema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self, DataError> {
        let schema = Self { label: default_label(), features };
        schema.validate()?;
        Ok(schema)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let mut seen = HashSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(DataError::Schema(format!("duplicate feature name {:?}", f.name)));
            }
            if f.name == self.label {
                return Err(DataError::Schema(format!("feature {:?} collides with the label column", f.name)));
            }
            match f.kind {
                FeatureKind::Ordinal | FeatureKind::Nominal if f.levels.is_empty() => {
                    return Err(DataError::Schema(format!("categorical feature {:?} has no levels", f.name)));
                }
                FeatureKind::Binary if !f.levels.is_empty() && f.levels.len() != 2 => {
                    return Err(DataError::Schema(format!("binary feature {:?} must list exactly 2 levels", f.name)));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, DataError> {
        let schema: Schema = toml::from_str(text).map_err(|e| DataError::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes to TOML")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

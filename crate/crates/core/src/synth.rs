//! Synthetic cohorts drawn from per-class marginal distributions.
//!
//! Features are independent given the outcome. Continuous features are
//! Gaussian (clamped to a plausible range), categorical ones follow per-class
//! level probabilities.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Cohort, DataError, FeatureKind, FeatureSpec, PatientRecord, Schema};

/// Normal-theory ratio between the interquartile range and the SD.
pub const IQR_PER_SD: f64 = 1.349;

/// Distribution of one feature in each outcome class. Pairs are
/// `[survivors, deceased]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureDistribution {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
    /// Gaussian means (continuous only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<[f64; 2]>,
    /// Gaussian SDs (continuous only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<[f64; 2]>,
    /// Draws are clamped to `[lo, hi]` (continuous only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    /// Decimal places kept (continuous only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimals: Option<u32>,
    /// Level probabilities per class (categorical only). Binary features
    /// without levels list `[P(0), P(1)]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<[Vec<f64>; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSpec {
    pub n: usize,
    pub prevalence: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(rename = "feature")]
    pub features: Vec<FeatureDistribution>,
}

fn default_label() -> String {
    "label".into()
}

fn normalized(p: &[f64]) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    p.iter().map(|v| v / total).collect()
}

fn gaussian(name: &str, median: [f64; 2], iqr: [f64; 2], range: [f64; 2]) -> FeatureDistribution {
    FeatureDistribution {
        name: name.into(),
        kind: FeatureKind::Continuous,
        levels: Vec::new(),
        location: Some(median),
        scale: Some([iqr[0] / IQR_PER_SD, iqr[1] / IQR_PER_SD]),
        range: Some(range),
        decimals: Some(0),
        probabilities: None,
    }
}

fn categorical(name: &str, kind: FeatureKind, levels: &[&str], survivors: &[f64], deceased: &[f64]) -> FeatureDistribution {
    FeatureDistribution {
        name: name.into(),
        kind,
        levels: levels.iter().map(|s| s.to_string()).collect(),
        location: None,
        scale: None,
        range: None,
        decimals: None,
        probabilities: Some([normalized(survivors), normalized(deceased)]),
    }
}

impl Default for CohortSpec {
    /// Acute coronary syndrome cohort: 1111 patients, 4.95% in-hospital
    /// mortality. Continuous features use median as the mean and IQR/1.349
    /// as the SD; reported category frequencies are renormalized.
    fn default() -> Self {
        Self {
            n: 1111,
            prevalence: 0.0495,
            seed: 14,
            label: default_label(),
            features: vec![
                categorical(
                    "diagnosis",
                    FeatureKind::Ordinal,
                    &["UA", "NSTEMI", "STEMI"],
                    &[0.231, 0.410, 0.349],
                    &[0.055, 0.345, 0.600],
                ),
                gaussian("age", [64.0, 72.0], [73.0 - 54.0, 81.0 - 63.0], [18.0, 100.0]),
                gaussian("sbp", [140.0, 130.0], [160.0 - 121.0, 150.0 - 107.0], [60.0, 260.0]),
                gaussian("hr", [75.0, 90.0], [87.0 - 64.0, 105.0 - 76.0], [30.0, 200.0]),
                categorical(
                    "killip",
                    FeatureKind::Ordinal,
                    &["I", "II", "III", "IV"],
                    &[0.841, 0.087, 0.051, 0.006],
                    &[0.491, 0.200, 0.200, 0.073],
                ),
                categorical("stroke", FeatureKind::Binary, &["no", "yes"], &[0.933, 0.067], &[0.745, 0.255]),
            ],
        }
    }
}

impl FeatureDistribution {
    fn spec(&self) -> FeatureSpec {
        FeatureSpec { name: self.name.clone(), kind: self.kind, levels: self.levels.clone(), dummy_of: None }
    }

    fn validate(&self) -> Result<(), String> {
        let name = &self.name;
        match self.kind {
            FeatureKind::Continuous => {
                let (Some(loc), Some(scale)) = (self.location, self.scale) else {
                    return Err(format!("{name}: continuous features need location and scale"));
                };
                if loc.iter().any(|v| !v.is_finite()) || scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(format!("{name}: locations must be finite and scales positive"));
                }
                if let Some([lo, hi]) = self.range {
                    if !(lo < hi) {
                        return Err(format!("{name}: empty range"));
                    }
                }
            }
            _ => {
                let Some(probs) = &self.probabilities else {
                    return Err(format!("{name}: categorical features need probabilities"));
                };
                let levels = self.spec().level_count().unwrap_or(2);
                for p in probs {
                    if p.len() != levels {
                        return Err(format!("{name}: {} probabilities for {levels} levels", p.len()));
                    }
                    if p.iter().any(|v| !(*v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
                        return Err(format!("{name}: class probabilities must be nonnegative and sum to 1"));
                    }
                }
            }
        }
        Ok(())
    }

    fn sample(&self, class: usize, rng: &mut ChaCha8Rng) -> f64 {
        match self.kind {
            FeatureKind::Continuous => {
                let (loc, scale) = (self.location.unwrap()[class], self.scale.unwrap()[class]);
                let mut v = Normal::new(loc, scale).expect("validated scale").sample(rng);
                if let Some([lo, hi]) = self.range {
                    v = v.clamp(lo, hi);
                }
                if let Some(d) = self.decimals {
                    let f = 10f64.powi(d as i32);
                    v = (v * f).round() / f;
                }
                v
            }
            _ => {
                let probs = &self.probabilities.as_ref().unwrap()[class];
                WeightedIndex::new(probs).expect("validated probabilities").sample(rng) as f64
            }
        }
    }
}

impl CohortSpec {
    pub fn schema(&self) -> Result<Schema, DataError> {
        Ok(Schema::new(self.features.iter().map(FeatureDistribution::spec).collect())?.with_label(self.label.clone()))
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if !(0.0..=1.0).contains(&self.prevalence) {
            return Err(DataError::Schema(format!("prevalence {} outside [0, 1]", self.prevalence)));
        }
        self.schema()?;
        for f in &self.features {
            f.validate().map_err(DataError::Schema)?;
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, DataError> {
        let spec: CohortSpec = toml::from_str(text).map_err(|e| DataError::Schema(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("spec serializes to TOML")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DataError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml_str(&text)
    }
}

/// Draws `spec.n` labeled records. Labels are Bernoulli(prevalence) and
/// features are drawn from the distribution of the record's class.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Cohort, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let records = (0..spec.n)
        .map(|_| {
            let label = rng.random_bool(spec.prevalence);
            let class = usize::from(label);
            let values = spec.features.iter().map(|f| Some(f.sample(class, &mut rng))).collect();
            PatientRecord::new(values, Some(label))
        })
        .collect();
    Cohort::new(spec.schema()?, records)
}

/// Blanks each feature cell independently with probability `rate`. Labels
/// are untouched.
pub fn inject_missing(cohort: &Cohort, rate: f64, seed: u64) -> Result<Cohort, DataError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(DataError::Precondition(format!("missing rate {rate} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = cohort.clone();
    for r in &mut out.records {
        for v in &mut r.values {
            if rng.random_bool(rate) {
                *v = None;
            }
        }
    }
    Ok(out)
}

//! Dichotomous decision rules built from the two class centroids of a
//! single risk factor.
//!
//! A rule sits at the midpoint between the survivors' and the deceased
//! centroid. A value's *normalized distance* is its relative proximity to
//! the deceased centroid: 1 at that centroid, 0 at the survivors' one and
//! 0.5 at the threshold. The rule suggests death when it is at least 0.5.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{format_number, FeatureKind, FeatureSpec};

#[derive(Debug, Error, PartialEq)]
pub enum RuleError {
    #[error("feature {feature:?}: no observed values for the {class} class")]
    MissingClass { feature: String, class: &'static str },
    #[error("feature {0:?}: class centroids coincide, the rule has no direction")]
    Degenerate(String),
    #[error("feature {feature:?}: {values} values for {labels} labels")]
    Length { feature: String, values: usize, labels: usize },
}

/// How a class centroid summarizes its class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    #[default]
    Mean,
    /// For strongly skewed variables.
    Median,
}

impl Aggregator {
    fn apply(self, values: &mut [f64]) -> f64 {
        match self {
            Aggregator::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregator::Median => {
                values.sort_by(f64::total_cmp);
                let n = values.len();
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    (values[n / 2 - 1] + values[n / 2]) / 2.0
                }
            }
        }
    }
}

/// Which side of the threshold suggests death.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeathDirection {
    /// `value >= threshold` suggests death.
    AtOrAbove,
    /// `value <= threshold` suggests death (the threshold itself is
    /// equidistant and resolves toward death).
    AtOrBelow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub feature: String,
    /// Centroid of the deceased (label 1) class.
    pub positive_centroid: f64,
    /// Centroid of the survivors (label 0).
    pub negative_centroid: f64,
    pub threshold: f64,
    pub direction: DeathDirection,
    pub aggregator: Aggregator,
}

/// Output of one rule for one value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleEvaluation {
    pub normalized_distance: f64,
    /// `true` = the rule suggests death.
    pub output: bool,
}

/// Builds the rule for one feature. Missing values are skipped; unlabeled
/// entries must not be passed.
pub fn fit_rule(feature: &str, values: &[Option<f64>], labels: &[bool], aggregator: Aggregator) -> Result<Rule, RuleError> {
    if values.len() != labels.len() {
        return Err(RuleError::Length { feature: feature.to_string(), values: values.len(), labels: labels.len() });
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (v, &l) in values.iter().zip(labels) {
        if let Some(v) = v {
            if l { pos.push(*v) } else { neg.push(*v) }
        }
    }
    if pos.is_empty() {
        return Err(RuleError::MissingClass { feature: feature.to_string(), class: "positive" });
    }
    if neg.is_empty() {
        return Err(RuleError::MissingClass { feature: feature.to_string(), class: "negative" });
    }
    let positive_centroid = aggregator.apply(&mut pos);
    let negative_centroid = aggregator.apply(&mut neg);
    Rule::from_centroids(feature, positive_centroid, negative_centroid, aggregator)
}

impl Rule {
    pub fn from_centroids(feature: &str, positive_centroid: f64, negative_centroid: f64, aggregator: Aggregator) -> Result<Rule, RuleError> {
        if positive_centroid == negative_centroid {
            return Err(RuleError::Degenerate(feature.to_string()));
        }
        let direction = if positive_centroid > negative_centroid {
            DeathDirection::AtOrAbove
        } else {
            DeathDirection::AtOrBelow
        };
        Ok(Rule {
            feature: feature.to_string(),
            positive_centroid,
            negative_centroid,
            threshold: (positive_centroid + negative_centroid) / 2.0,
            direction,
            aggregator,
        })
    }

    /// `1 - d_pos / (d_pos + d_neg)`, in `[0, 1]`. Exactly 0.5 at the
    /// threshold.
    pub fn normalized_distance(&self, value: f64) -> f64 {
        if value == self.threshold {
            return 0.5;
        }
        let d_pos = (value - self.positive_centroid).abs();
        let d_neg = (value - self.negative_centroid).abs();
        // d_pos + d_neg >= |positive - negative| > 0
        d_neg / (d_pos + d_neg)
    }

    pub fn evaluate(&self, value: f64) -> RuleEvaluation {
        let normalized_distance = self.normalized_distance(value);
        RuleEvaluation { normalized_distance, output: normalized_distance >= 0.5 }
    }

    /// Human-readable form, e.g. `≥ 67: death` or `II, III, IV: death`.
    pub fn describe(&self, feature: &FeatureSpec) -> String {
        match feature.kind {
            FeatureKind::Continuous => {
                let op = match self.direction {
                    DeathDirection::AtOrAbove => "≥",
                    DeathDirection::AtOrBelow => "≤",
                };
                format!("{op} {}: death", format_number(self.threshold))
            }
            _ => {
                let names: Vec<String> = match feature.level_count() {
                    Some(n) if !feature.levels.is_empty() => (0..n)
                        .filter(|&l| self.evaluate(l as f64).output)
                        .map(|l| feature.levels[l].clone())
                        .collect(),
                    _ => [0.0, 1.0]
                        .into_iter()
                        .filter(|&v| self.evaluate(v).output)
                        .map(format_number)
                        .collect(),
                };
                format!("{}: death", names.join(", "))
            }
        }
    }
}

/// Rule acceptance labels for one record: `true` where the rule output
/// matches the observed outcome.
pub fn acceptance_labels(outputs: &[bool], true_label: bool) -> Vec<bool> {
    outputs.iter().map(|&o| o == true_label).collect()
}

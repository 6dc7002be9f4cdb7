//! The trainable method as one object: rules, per-rule acceptance models,
//! score, calibration, reliability and risk stratification.

mod artifact;
mod calibration;
mod score;

use std::collections::BTreeSet;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{check_record, knn_impute, one_hot_expand, sub_seed, undersample_negatives, Cohort, DataError, PatientRecord, Schema};
use crate::eval::{confusion_at, geometric_mean};
use crate::learners::{LearnError, Model, ModelKind, TrainConfig};
use crate::rules::{acceptance_labels, fit_rule, Aggregator, Rule, RuleError};

pub use artifact::{load_pipeline, pipeline_from_json, pipeline_to_json, save_pipeline, ARTIFACT_FORMAT, ARTIFACT_VERSION};
pub use calibration::{fit_calibration, Calibration, CALIBRATION_CAP};
pub use score::{mortality_score, reliability, Score};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("acceptance model for rule {rule:?}: {source}")]
    Learn {
        rule: String,
        #[source]
        source: LearnError,
    },
    #[error("calibration: {0}")]
    Calibration(String),
    #[error("no usable rules")]
    NoRules,
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt artifact: {0}")]
    Corrupt(String),
    #[error("artifact version {found} is newer than the supported version {supported}")]
    Version { found: String, supported: String },
}

fn default_ratio() -> f64 {
    1.5
}

fn default_k() -> usize {
    10
}

fn default_model() -> ModelKind {
    ModelKind::network_8_4()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Features that get a rule; `None` means every feature. A nominal
    /// feature yields one rule per level.
    #[serde(default)]
    pub rule_features: Option<Vec<String>>,
    /// Features whose centroids use the median instead of the mean.
    #[serde(default)]
    pub median_features: Vec<String>,
    #[serde(default = "default_model")]
    pub acceptance_model: ModelKind,
    #[serde(default)]
    pub train: TrainConfig,
    /// Negatives kept per positive when training the acceptance models.
    #[serde(default = "default_ratio")]
    pub undersample_ratio: f64,
    #[serde(default = "default_k")]
    pub knn_k: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            rule_features: None,
            median_features: Vec::new(),
            acceptance_model: default_model(),
            train: TrainConfig::default(),
            undersample_ratio: default_ratio(),
            knn_k: default_k(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub format: String,
    pub version: String,
    /// Schema of the input records.
    pub schema: Schema,
    /// Schema after one-hot expansion; the acceptance models read this.
    pub encoded_schema: Schema,
    pub rules: Vec<Rule>,
    /// Column of each rule's feature in `encoded_schema`.
    pub rule_columns: Vec<usize>,
    pub acceptance_models: Vec<Model>,
    pub calibration: Calibration,
    pub strat_threshold: f64,
    pub knn_k: usize,
    /// Training records without labels, used as imputation neighbors.
    pub reference: Cohort,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stratum {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleOutcome {
    pub feature: String,
    pub normalized_distance: f64,
    /// `true` = the rule suggests death.
    pub output: bool,
    /// Predicted probability that the rule is right for this patient.
    pub acceptance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub per_rule: Vec<RuleOutcome>,
    pub score_t: f64,
    pub score_s: f64,
    pub risk: f64,
    pub reliability: f64,
    pub stratum: Stratum,
    /// Names of input features that were missing and imputed.
    pub imputed: Vec<String>,
}

/// Lowest cutoff maximizing the geometric mean of sensitivity and
/// specificity, scanned over the midpoints between consecutive distinct
/// risks. Records with `risk >= cutoff` are high risk.
pub fn select_strat_threshold(risks: &[f64], labels: &[bool]) -> Result<f64, PipelineError> {
    if risks.len() != labels.len() {
        return Err(PipelineError::Input(format!("{} risks for {} labels", risks.len(), labels.len())));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(PipelineError::Input("threshold selection needs both outcome classes".into()));
    }
    let mut distinct: Vec<f64> = risks.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() == 1 {
        return Ok(distinct[0]);
    }
    let mut best = (f64::NEG_INFINITY, distinct[0]);
    for w in distinct.windows(2) {
        let cutoff = (w[0] + w[1]) / 2.0;
        let gm = geometric_mean(&confusion_at(risks, labels, cutoff)).map_err(|e| PipelineError::Input(e.to_string()))?;
        if gm > best.0 {
            best = (gm, cutoff);
        }
    }
    Ok(best.1)
}

fn resolve_rule_columns(schema: &Schema, encoded: &Schema, config: &PipelineConfig) -> Result<Vec<usize>, PipelineError> {
    let names: Vec<String> = match &config.rule_features {
        None => schema.features.iter().map(|f| f.name.clone()).collect(),
        Some(list) => list.clone(),
    };
    let mut seen = BTreeSet::new();
    let mut cols = Vec::new();
    for name in &names {
        if !seen.insert(name.clone()) {
            return Err(PipelineError::Input(format!("rule feature {name:?} listed twice")));
        }
        let found: Vec<usize> = encoded
            .features
            .iter()
            .enumerate()
            .filter(|(_, f)| &f.name == name || f.dummy_of.as_deref() == Some(name))
            .map(|(j, _)| j)
            .collect();
        if found.is_empty() {
            return Err(PipelineError::Input(format!("rule feature {name:?} is not in the schema")));
        }
        cols.extend(found);
    }
    for name in &config.median_features {
        if !names.contains(name) {
            return Err(PipelineError::Input(format!("median feature {name:?} has no rule")));
        }
    }
    Ok(cols)
}

fn aggregator_for(encoded: &Schema, column: usize, config: &PipelineConfig) -> Aggregator {
    let f = &encoded.features[column];
    let source = f.dummy_of.as_deref().unwrap_or(&f.name);
    if config.median_features.iter().any(|m| m == source) {
        Aggregator::Median
    } else {
        Aggregator::Mean
    }
}

/// Trains the whole method on a labeled cohort.
///
/// Order: impute the training set against itself, fit one rule per feature,
/// derive acceptance labels, undersample negatives, train one acceptance
/// model per rule on all features, then score every training record and fit
/// the calibration and the stratification threshold on those scores.
pub fn fit_pipeline(train: &Cohort, config: &PipelineConfig) -> Result<FittedPipeline, PipelineError> {
    if !(config.undersample_ratio > 0.0) {
        return Err(PipelineError::Input("undersample ratio must be positive".into()));
    }
    let labels = train.labels()?;
    let imputed = knn_impute(train, train, config.knn_k)?.cohort;
    let encoded = one_hot_expand(&imputed);
    let x = encoded.matrix()?;
    let columns = resolve_rule_columns(&train.schema, &encoded.schema, config)?;
    let mut warnings = Vec::new();

    let mut rules = Vec::new();
    let mut rule_columns = Vec::new();
    for &j in &columns {
        let name = &encoded.schema.features[j].name;
        match fit_rule(name, &encoded.column(j), &labels, aggregator_for(&encoded.schema, j, config)) {
            Ok(rule) => {
                rules.push(rule);
                rule_columns.push(j);
            }
            Err(e @ RuleError::Degenerate(_)) => {
                warn!("{e}; rule dropped");
                warnings.push(format!("{e}; rule dropped"));
            }
            Err(e) => return Err(e.into()),
        }
    }

    let outputs: Vec<Vec<bool>> =
        x.iter().map(|row| rules.iter().zip(&rule_columns).map(|(r, &j)| r.evaluate(row[j]).output).collect()).collect();
    let acceptance: Vec<Vec<bool>> = outputs.iter().zip(&labels).map(|(o, &l)| acceptance_labels(o, l)).collect();

    let all: Vec<usize> = (0..train.len()).collect();
    let kept = undersample_negatives(&all, train, config.undersample_ratio, sub_seed(config.seed, 0))?;
    let x_kept: Vec<Vec<f64>> = kept.iter().map(|&i| x[i].clone()).collect();

    let fits: Vec<Result<Option<Model>, PipelineError>> = rules
        .par_iter()
        .enumerate()
        .map(|(r, rule)| {
            let y: Vec<bool> = kept.iter().map(|&i| acceptance[i][r]).collect();
            if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
                return Ok(None);
            }
            let cfg = config.train.with_seed(sub_seed(config.seed, 1 + r as u64));
            config
                .acceptance_model
                .fit(&x_kept, &y, &cfg)
                .map(Some)
                .map_err(|source| PipelineError::Learn { rule: rule.feature.clone(), source })
        })
        .collect();

    let mut kept_rules = Vec::new();
    let mut kept_columns = Vec::new();
    let mut models = Vec::new();
    for ((rule, col), fit) in rules.into_iter().zip(rule_columns).zip(fits) {
        match fit? {
            Some(m) => {
                kept_rules.push(rule);
                kept_columns.push(col);
                models.push(m);
            }
            None => {
                let msg = format!("rule {:?} is right or wrong for every training record; rule dropped", rule.feature);
                warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    if kept_rules.is_empty() {
        return Err(PipelineError::NoRules);
    }

    let mut pipeline = FittedPipeline {
        format: ARTIFACT_FORMAT.to_string(),
        version: ARTIFACT_VERSION.to_string(),
        schema: train.schema.clone(),
        encoded_schema: encoded.schema.clone(),
        rules: kept_rules,
        rule_columns: kept_columns,
        acceptance_models: models,
        calibration: Calibration { intercept: 0.0, slope: 0.0, capped: false },
        strat_threshold: 0.5,
        knn_k: config.knn_k,
        reference: Cohort {
            schema: train.schema.clone(),
            records: train.records.iter().map(|r| PatientRecord::new(r.values.clone(), None)).collect(),
        },
        warnings,
    };

    let scores: Vec<f64> = x.iter().map(|row| pipeline.score_encoded(row).map(|(_, s)| s.s)).collect::<Result<_, _>>()?;
    pipeline.calibration = fit_calibration(&scores, &labels)?;
    if pipeline.calibration.capped {
        let msg = "calibration coefficients were capped; training scores separate the classes".to_string();
        warn!("{msg}");
        pipeline.warnings.push(msg);
    }
    let risks: Vec<f64> = scores.iter().map(|&s| pipeline.calibration.risk(s)).collect();
    pipeline.strat_threshold = select_strat_threshold(&risks, &labels)?;
    Ok(pipeline)
}

impl FittedPipeline {
    /// Rule outcomes and score for one complete, encoded row.
    fn score_encoded(&self, row: &[f64]) -> Result<(Vec<RuleOutcome>, Score), PipelineError> {
        let mut per_rule = Vec::with_capacity(self.rules.len());
        for ((rule, &j), model) in self.rules.iter().zip(&self.rule_columns).zip(&self.acceptance_models) {
            let eval = rule.evaluate(row[j]);
            let acceptance =
                model.predict_proba(row).map_err(|source| PipelineError::Learn { rule: rule.feature.clone(), source })?;
            per_rule.push(RuleOutcome {
                feature: rule.feature.clone(),
                normalized_distance: eval.normalized_distance,
                output: eval.output,
                acceptance,
            });
        }
        let outputs: Vec<bool> = per_rule.iter().map(|o| o.output).collect();
        let acc: Vec<f64> = per_rule.iter().map(|o| o.acceptance).collect();
        let score = mortality_score(&outputs, &acc)?;
        Ok((per_rule, score))
    }

    fn finish(&self, per_rule: Vec<RuleOutcome>, score: Score, imputed: Vec<String>) -> Result<Prediction, PipelineError> {
        let outputs: Vec<bool> = per_rule.iter().map(|o| o.output).collect();
        let acc: Vec<f64> = per_rule.iter().map(|o| o.acceptance).collect();
        let risk = self.calibration.risk(score.s);
        Ok(Prediction {
            reliability: reliability(&outputs, &acc)?,
            per_rule,
            score_t: score.t,
            score_s: score.s,
            risk,
            stratum: if risk >= self.strat_threshold { Stratum::High } else { Stratum::Low },
            imputed,
        })
    }

    /// Risk of the calibrated score `s`.
    pub fn risk(&self, s: f64) -> f64 {
        self.calibration.risk(s)
    }

    /// Human-readable rule text per rule, e.g. `≥ 67: death`.
    pub fn rule_descriptions(&self) -> Vec<String> {
        self.rules
            .iter()
            .zip(&self.rule_columns)
            .map(|(r, &j)| r.describe(&self.encoded_schema.features[j]))
            .collect()
    }

    /// Predicts every record of `cohort`, which must use this pipeline's
    /// input schema. Missing values are imputed against the training
    /// reference.
    pub fn predict_cohort(&self, cohort: &Cohort) -> Result<Vec<Prediction>, PipelineError> {
        if cohort.schema.features != self.schema.features {
            return Err(PipelineError::Input("records do not use the pipeline's schema".into()));
        }
        for (index, r) in cohort.records.iter().enumerate() {
            check_record(&self.schema, r).map_err(|message| DataError::Record { index, message })?;
        }
        let imputation = knn_impute(&self.reference, cohort, self.knn_k)?;
        let mut imputed_names: Vec<Vec<String>> = vec![Vec::new(); cohort.len()];
        for &(i, j) in &imputation.imputed {
            imputed_names[i].push(self.schema.features[j].name.clone());
        }
        let encoded = one_hot_expand(&imputation.cohort);
        encoded
            .records
            .iter()
            .zip(imputed_names)
            .map(|(r, names)| {
                let row = r.dense().ok_or_else(|| PipelineError::Input("imputation left a missing value".into()))?;
                let (per_rule, score) = self.score_encoded(&row)?;
                self.finish(per_rule, score, names)
            })
            .collect()
    }

    /// Predicts one record.
    pub fn predict_patient(&self, record: &PatientRecord) -> Result<Prediction, PipelineError> {
        let cohort = Cohort { schema: self.schema.clone(), records: vec![PatientRecord::new(record.values.clone(), None)] };
        Ok(self.predict_cohort(&cohort)?.remove(0))
    }

    /// Number of acceptance-model inputs.
    pub fn input_dim(&self) -> usize {
        self.encoded_schema.len()
    }
}

/// Free-function form of [`FittedPipeline::predict_patient`].
pub fn predict_patient(pipeline: &FittedPipeline, record: &PatientRecord) -> Result<Prediction, PipelineError> {
    pipeline.predict_patient(record)
}

#[cfg(test)]
mod tests;

//! Interpretable clinical risk prediction from dichotomous rules.
//!
//! Each risk factor becomes a single threshold rule placed halfway between
//! the survivors' and the deceased patients' centroids. A classifier per
//! rule predicts how likely that rule is to be right for a given patient;
//! the acceptance-weighted rule outputs give a score that is calibrated into
//! a risk, and the gap between the mean acceptance of death-suggesting and
//! survival-suggesting rules gives a per-patient reliability estimate.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod learners;
pub mod rules;
pub mod stats;
pub mod eval;
pub mod pipeline;
pub mod synth;

pub use data::{Cohort, DataError, FeatureKind, FeatureSpec, PatientRecord, Schema, SplitPlan};
pub use eval::{Competitor, EvalError, EvalReport, MccvOptions, PointScoreModel};
pub use learners::{LearnError, Model, ModelKind, TrainConfig};
pub use pipeline::{FittedPipeline, PipelineConfig, PipelineError, Prediction, RuleOutcome, Stratum};
pub use rules::{Aggregator, DeathDirection, Rule, RuleEvaluation};
pub use synth::CohortSpec;

//! Discrimination and calibration metrics, reliability-bin analysis,
//! baseline comparators and the Monte-Carlo cross-validation driver.

mod curves;
mod mccv;
mod metrics;
mod point_score;
mod report;

use thiserror::Error;

pub use curves::{calibration_curve, reliability_bins, CalibrationBin, CalibrationCurve, ReliabilityBin, ReliabilityBinTable, RELIABILITY_BINS};
pub use mccv::{
    baseline_logistic_config, baseline_network_config, run_mccv, Competitor, CompetitorKind, DeltaSummary, EvalReport, MccvOptions, MetricCis, ModelSummary, PooledCalibration,
    PooledCalibrationBin, RepFailure, RepRow, Split,
};
pub use metrics::{confusion_at, geometric_mean, npv_ppv_at_sensitivity, roc_auc, ConfusionCounts, PredictiveValues};
pub use point_score::{point_score_predict, PointScoreModel, PointScorePrediction, PointTable, RiskCategory, RiskMapping};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{scores} scores for {labels} labels")]
    Length { scores: usize, labels: usize },
    #[error("metric needs both outcome classes")]
    SingleClass,
    #[error("{0}")]
    Input(String),
}

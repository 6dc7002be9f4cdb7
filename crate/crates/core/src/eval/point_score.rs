use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::data::{PatientRecord, Schema};
use crate::learners::sigmoid;

/// Points for one feature: band `i` is `[breakpoints[i], breakpoints[i+1])`
/// and scores `points[i]`; the last band also includes its upper edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointTable {
    pub feature: String,
    pub breakpoints: Vec<f64>,
    pub points: Vec<f64>,
}

/// Total score to risk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RiskMapping {
    Logistic { intercept: f64, slope: f64 },
    /// Linear interpolation between `(scores[i], risks[i])`, constant
    /// beyond the ends.
    Piecewise { scores: Vec<f64>, risks: Vec<f64> },
}

/// Risk group starting at `min_score`. Groups flagged `high` form the
/// high-risk side of the two-group split; the rest are folded into low.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskCategory {
    pub name: String,
    pub min_score: f64,
    #[serde(default)]
    pub high: bool,
}

/// Additive point-score model with user-supplied tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointScoreModel {
    #[serde(rename = "table")]
    pub tables: Vec<PointTable>,
    pub risk: RiskMapping,
    #[serde(rename = "category")]
    pub categories: Vec<RiskCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointScorePrediction {
    pub score: f64,
    pub risk: f64,
    pub category: String,
    pub high: bool,
}

impl PointScoreModel {
    pub fn validate(&self) -> Result<(), EvalError> {
        for t in &self.tables {
            if t.breakpoints.len() < 2 || t.points.len() + 1 != t.breakpoints.len() {
                return Err(EvalError::Input(format!("{}: need n+1 breakpoints for n point bands", t.feature)));
            }
            if t.breakpoints.windows(2).any(|w| !(w[0] < w[1])) || t.points.iter().any(|p| !p.is_finite()) {
                return Err(EvalError::Input(format!("{}: breakpoints must increase and points be finite", t.feature)));
            }
        }
        if let RiskMapping::Piecewise { scores, risks } = &self.risk {
            if scores.is_empty() || scores.len() != risks.len() || scores.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(EvalError::Input("piecewise risk map needs increasing scores, one risk each".into()));
            }
            if risks.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(EvalError::Input("piecewise risks must lie in [0, 1]".into()));
            }
        }
        if self.categories.is_empty() || self.categories.windows(2).any(|w| !(w[0].min_score < w[1].min_score)) {
            return Err(EvalError::Input("risk categories must be non-empty with increasing minimum scores".into()));
        }
        if self.categories.windows(2).any(|w| w[0].high && !w[1].high) {
            return Err(EvalError::Input("high-risk categories must come after the low-risk ones".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, EvalError> {
        let model: PointScoreModel = toml::from_str(text).map_err(|e| EvalError::Input(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    fn points(&self, schema: &Schema, record: &PatientRecord) -> Result<f64, EvalError> {
        let mut total = 0.0;
        for t in &self.tables {
            let j = schema.index_of(&t.feature).ok_or_else(|| EvalError::Input(format!("unknown feature {:?}", t.feature)))?;
            let v = record.values.get(j).copied().flatten().ok_or_else(|| EvalError::Input(format!("{} is missing", t.feature)))?;
            let last = t.breakpoints.len() - 1;
            if v < t.breakpoints[0] || v > t.breakpoints[last] {
                return Err(EvalError::Input(format!("{} = {v} outside the configured breakpoints", t.feature)));
            }
            let band = t.breakpoints[1..last].iter().take_while(|&&b| v >= b).count();
            total += t.points[band];
        }
        Ok(total)
    }

    fn map_risk(&self, score: f64) -> f64 {
        match &self.risk {
            RiskMapping::Logistic { intercept, slope } => sigmoid(intercept + slope * score),
            RiskMapping::Piecewise { scores, risks } => {
                let i = scores.partition_point(|&s| s <= score);
                if i == 0 {
                    risks[0]
                } else if i == scores.len() {
                    risks[i - 1]
                } else {
                    let f = (score - scores[i - 1]) / (scores[i] - scores[i - 1]);
                    risks[i - 1] + f * (risks[i] - risks[i - 1])
                }
            }
        }
    }
}

/// Total points, mapped risk and risk group for one record.
pub fn point_score_predict(model: &PointScoreModel, schema: &Schema, record: &PatientRecord) -> Result<PointScorePrediction, EvalError> {
    let score = model.points(schema, record)?;
    let category = model.categories.iter().rev().find(|c| score >= c.min_score).unwrap_or(&model.categories[0]);
    Ok(PointScorePrediction { score, risk: model.map_risk(score), category: category.name.clone(), high: category.high })
}

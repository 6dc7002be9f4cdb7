//! HTTP scoring service.
//!
//! * `POST /predict`: JSON object mapping feature names to values (numbers,
//!   level names, or `null`/absent for missing) to a [`PredictResponse`].
//! * `GET /model`: schema, rules, calibration and threshold.
//! * `GET /health`: liveness.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rulerisk::{DeathDirection, FeatureKind, FittedPipeline, PatientRecord, Stratum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleResult {
    pub feature: String,
    /// Rule text, e.g. `≥ 67: death`.
    pub threshold: String,
    /// 1 = the rule suggests death.
    pub output: u8,
    pub acceptance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub per_rule: Vec<RuleResult>,
    pub score_s: f64,
    pub risk: f64,
    pub reliability: f64,
    pub stratum: Stratum,
    pub model_version: String,
    /// Features that were missing from the request and imputed.
    pub imputed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleInfo {
    pub feature: String,
    /// Input feature the rule reads (differs from `feature` for one-hot
    /// levels of a nominal feature).
    pub source_feature: String,
    pub threshold: f64,
    pub direction: DeathDirection,
    pub positive_centroid: f64,
    pub negative_centroid: f64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub version: String,
    pub features: Vec<FeatureInfo>,
    pub rules: Vec<RuleInfo>,
    pub calibration_intercept: f64,
    pub calibration_slope: f64,
    pub strat_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

fn client_error(status: StatusCode, error: &str, message: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: error.into(), message: message.into() })).into_response()
}

pub fn router(pipeline: FittedPipeline) -> Router {
    Router::new()
        .route("/predict", post(predict))
        .route("/model", get(model_info))
        .route("/health", get(health))
        .with_state(Arc::new(pipeline))
}

/// Builds the input record of a request, rejecting unknown names and
/// values that do not fit their feature.
pub fn request_record(pipeline: &FittedPipeline, request: &BTreeMap<String, Value>) -> Result<PatientRecord, String> {
    if let Some(unknown) = request.keys().find(|k| pipeline.schema.index_of(k).is_none()) {
        return Err(format!("unknown feature {unknown:?}"));
    }
    let values = pipeline
        .schema
        .features
        .iter()
        .map(|f| {
            let cell = match request.get(&f.name) {
                None | Some(Value::Null) => return Ok(None),
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                Some(Value::Bool(b)) if f.kind == FeatureKind::Binary && f.levels.is_empty() => u8::from(*b).to_string(),
                Some(other) => return Err(format!("{}: unsupported value {other}", f.name)),
            };
            f.parse_cell(&cell).map_err(|m| format!("{}: {m}", f.name))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PatientRecord::new(values, None))
}

/// The service's answer for one request; also what `POST /predict` returns.
/// Errors are sent with status 422.
pub fn respond(pipeline: &FittedPipeline, request: &BTreeMap<String, Value>) -> Result<PredictResponse, ErrorBody> {
    let fail = |error: &str, message: String| ErrorBody { error: error.into(), message };
    let record = request_record(pipeline, request).map_err(|m| fail("invalid_request", m))?;
    let p = pipeline.predict_patient(&record).map_err(|e| fail("prediction_failed", e.to_string()))?;
    let per_rule = p
        .per_rule
        .iter()
        .zip(pipeline.rule_descriptions())
        .map(|(o, text)| RuleResult { feature: o.feature.clone(), threshold: text, output: u8::from(o.output), acceptance: o.acceptance })
        .collect();
    Ok(PredictResponse {
        per_rule,
        score_s: p.score_s,
        risk: p.risk,
        reliability: p.reliability,
        stratum: p.stratum,
        model_version: pipeline.version.clone(),
        imputed: p.imputed,
    })
}

async fn predict(
    State(pipeline): State<Arc<FittedPipeline>>,
    body: Result<Json<BTreeMap<String, Value>>, JsonRejection>,
) -> Response {
    let Json(request) = match body {
        Ok(b) => b,
        Err(e) => return client_error(e.status(), "malformed_request", e.body_text()),
    };
    match respond(&pipeline, &request) {
        Ok(r) => Json(r).into_response(),
        Err(e) => (StatusCode::UNPROCESSABLE_ENTITY, Json(e)).into_response(),
    }
}

pub fn model_info_of(pipeline: &FittedPipeline) -> ModelInfo {
    ModelInfo {
        version: pipeline.version.clone(),
        features: pipeline
            .schema
            .features
            .iter()
            .map(|f| FeatureInfo { name: f.name.clone(), kind: f.kind, levels: f.levels.clone() })
            .collect(),
        rules: pipeline
            .rules
            .iter()
            .zip(&pipeline.rule_columns)
            .zip(pipeline.rule_descriptions())
            .map(|((r, &col), description)| {
                let f = &pipeline.encoded_schema.features[col];
                RuleInfo {
                    feature: r.feature.clone(),
                    source_feature: f.dummy_of.clone().unwrap_or_else(|| f.name.clone()),
                    threshold: r.threshold,
                    direction: r.direction,
                    positive_centroid: r.positive_centroid,
                    negative_centroid: r.negative_centroid,
                    description,
                }
            })
            .collect(),
        calibration_intercept: pipeline.calibration.intercept,
        calibration_slope: pipeline.calibration.slope,
        strat_threshold: pipeline.strat_threshold,
    }
}

async fn model_info(State(pipeline): State<Arc<FittedPipeline>>) -> Json<ModelInfo> {
    Json(model_info_of(&pipeline))
}

async fn health() -> Json<Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

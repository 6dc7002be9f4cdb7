use std::fs;
use std::path::Path;

use super::{FittedPipeline, PipelineError};

pub const ARTIFACT_FORMAT: &str = "rulerisk-pipeline";
/// `major.minor`; readers accept any minor of their own major or older.
pub const ARTIFACT_VERSION: &str = "1.0";

fn parse_version(v: &str) -> Option<(u64, u64)> {
    let (major, minor) = v.split_once('.')?;
    Some((major.parse().ok()?, minor.parse().ok()?))
}

pub fn pipeline_to_json(pipeline: &FittedPipeline) -> String {
    serde_json::to_string_pretty(pipeline).expect("pipeline serialization is infallible")
}

pub fn pipeline_from_json(text: &str) -> Result<FittedPipeline, PipelineError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| PipelineError::Corrupt(e.to_string()))?;
    let format = value.get("format").and_then(|v| v.as_str()).unwrap_or_default();
    if format != ARTIFACT_FORMAT {
        return Err(PipelineError::Corrupt(format!("unexpected format tag {format:?}")));
    }
    let found = value.get("version").and_then(|v| v.as_str()).unwrap_or_default().to_string();
    let (major, _) = parse_version(&found).ok_or_else(|| PipelineError::Corrupt(format!("bad version {found:?}")))?;
    let (supported, _) = parse_version(ARTIFACT_VERSION).expect("valid constant");
    if major > supported {
        return Err(PipelineError::Version { found, supported: ARTIFACT_VERSION.to_string() });
    }
    let pipeline: FittedPipeline = serde_json::from_value(value).map_err(|e| PipelineError::Corrupt(e.to_string()))?;
    let r = pipeline.rules.len();
    if r == 0 || pipeline.acceptance_models.len() != r || pipeline.rule_columns.len() != r {
        return Err(PipelineError::Corrupt("rule, column and model counts disagree".into()));
    }
    if pipeline.rule_columns.iter().any(|&j| j >= pipeline.encoded_schema.len())
        || pipeline.acceptance_models.iter().any(|m| m.input_dim() != pipeline.encoded_schema.len())
    {
        return Err(PipelineError::Corrupt("model dimensions do not match the encoded schema".into()));
    }
    Ok(pipeline)
}

pub fn save_pipeline(pipeline: &FittedPipeline, path: impl AsRef<Path>) -> Result<(), PipelineError> {
    let path = path.as_ref();
    fs::write(path, pipeline_to_json(pipeline)).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

pub fn load_pipeline(path: impl AsRef<Path>) -> Result<FittedPipeline, PipelineError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
    pipeline_from_json(&text)
}

use serde::{Deserialize, Serialize};

use super::PipelineError;

/// Acceptance-weighted rule score: `t` in [-1, 1] and its rescaling `s`
/// in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub t: f64,
    pub s: f64,
}

fn check(outputs: &[bool], acceptances: &[f64]) -> Result<(), PipelineError> {
    if outputs.is_empty() {
        return Err(PipelineError::NoRules);
    }
    if outputs.len() != acceptances.len() {
        return Err(PipelineError::Input(format!("{} rule outputs for {} acceptances", outputs.len(), acceptances.len())));
    }
    if let Some(a) = acceptances.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(PipelineError::Input(format!("acceptance {a} outside [0, 1]")));
    }
    Ok(())
}

/// `t = (1/r) Σ (±1)·acceptance`, where a survival-suggesting rule counts
/// as -1; `s = (t + 1) / 2`.
pub fn mortality_score(outputs: &[bool], acceptances: &[f64]) -> Result<Score, PipelineError> {
    check(outputs, acceptances)?;
    let sum: f64 = outputs.iter().zip(acceptances).map(|(&o, &a)| if o { a } else { -a }).sum();
    let t = sum / outputs.len() as f64;
    Ok(Score { t, s: (t + 1.0) / 2.0 })
}

/// Absolute difference between the mean acceptance of the death-suggesting
/// rules and that of the survival-suggesting rules. A side with no rules
/// counts as mean 0.
pub fn reliability(outputs: &[bool], acceptances: &[f64]) -> Result<f64, PipelineError> {
    check(outputs, acceptances)?;
    let (mut pos, mut p, mut neg, mut q) = (0.0, 0usize, 0.0, 0usize);
    for (&o, &a) in outputs.iter().zip(acceptances) {
        if o {
            pos += a;
            p += 1;
        } else {
            neg += a;
            q += 1;
        }
    }
    let mean = |sum: f64, n: usize| if n == 0 { 0.0 } else { sum / n as f64 };
    Ok((mean(pos, p) - mean(neg, q)).abs())
}

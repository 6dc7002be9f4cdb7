use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::learners::sigmoid;

/// Coefficients are clipped to this magnitude when the classes are
/// separable and the likelihood has no finite maximizer.
pub const CALIBRATION_CAP: f64 = 100.0;

/// Logistic map from score to risk: `risk = sigmoid(intercept + slope·s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub intercept: f64,
    pub slope: f64,
    /// Set when the fit hit [`CALIBRATION_CAP`].
    #[serde(default)]
    pub capped: bool,
}

impl Calibration {
    pub fn risk(&self, score: f64) -> f64 {
        sigmoid(self.intercept + self.slope * score)
    }
}

fn log_likelihood(b0: f64, b1: f64, s: &[f64], y: &[bool]) -> f64 {
    s.iter()
        .zip(y)
        .map(|(&x, &l)| {
            let z = b0 + b1 * x;
            let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
            if l { z - softplus } else { -softplus }
        })
        .sum()
}

/// Maximum-likelihood single-feature logistic regression by damped Newton
/// iterations.
pub fn fit_calibration(scores: &[f64], labels: &[bool]) -> Result<Calibration, PipelineError> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(PipelineError::Calibration(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(PipelineError::Calibration("calibration needs both outcome classes".into()));
    }
    if scores.iter().all(|&s| s == scores[0]) {
        return Err(PipelineError::Calibration("scores are constant; the slope is unidentifiable".into()));
    }
    let (mut b0, mut b1) = (0.0f64, 0.0f64);
    let mut ll = log_likelihood(b0, b1, scores, labels);
    for _ in 0..200 {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &l) in scores.iter().zip(labels) {
            let p = sigmoid(b0 + b1 * x);
            let r = if l { 1.0 } else { 0.0 } - p;
            let w = p * (1.0 - p);
            g0 += r;
            g1 += r * x;
            h00 += w;
            h01 += w * x;
            h11 += w * x * x;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det > 0.0) || !det.is_finite() {
            // flat likelihood along the separating direction
            return Ok(capped(b0, b1));
        }
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;
        let mut step = 1.0;
        let (mut n0, mut n1, mut nll);
        loop {
            n0 = b0 + step * d0;
            n1 = b1 + step * d1;
            nll = log_likelihood(n0, n1, scores, labels);
            if nll >= ll || step < 1e-10 {
                break;
            }
            step /= 2.0;
        }
        let moved = (n0 - b0).abs().max((n1 - b1).abs());
        b0 = n0;
        b1 = n1;
        if b0.abs().max(b1.abs()) > CALIBRATION_CAP {
            return Ok(capped(b0, b1));
        }
        let gain = nll - ll;
        ll = nll;
        if moved < 1e-10 || gain.abs() < 1e-12 * (1.0 + ll.abs()) && moved < 1e-6 {
            return Ok(Calibration { intercept: b0, slope: b1, capped: false });
        }
    }
    Err(PipelineError::Calibration("calibration fit did not converge".into()))
}

fn capped(b0: f64, b1: f64) -> Calibration {
    let m = b0.abs().max(b1.abs());
    let k = if m > CALIBRATION_CAP { CALIBRATION_CAP / m } else { 1.0 };
    Calibration { intercept: b0 * k, slope: b1 * k, capped: true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_generating_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(2021);
        let s: Vec<f64> = (0..100_000).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<bool> = s.iter().map(|&v| rng.random_bool(sigmoid(-6.0 + 8.0 * v))).collect();
        let c = fit_calibration(&s, &y).unwrap();
        assert!((c.slope - 8.0).abs() < 0.3, "{c:?}");
        assert!((c.intercept + 6.0).abs() < 0.3, "{c:?}");
        assert!(!c.capped);
    }

    #[test]
    fn constant_scores_rejected() {
        assert!(fit_calibration(&[0.4; 6], &[true, false, true, false, false, false]).is_err());
    }

    #[test]
    fn separated_scores_are_capped() {
        let s = [0.1, 0.2, 0.3, 0.7, 0.8, 0.9];
        let y = [false, false, false, true, true, true];
        let c = fit_calibration(&s, &y).unwrap();
        assert!(c.capped);
        assert!(c.slope > 0.0 && c.slope.abs() <= CALIBRATION_CAP && c.intercept.abs() <= CALIBRATION_CAP);
    }

    #[test]
    fn risk_is_the_logistic_map() {
        let c = Calibration { intercept: -6.0, slope: 8.0, capped: false };
        assert_eq!(c.risk(0.5), sigmoid(-2.0));
        assert!(c.risk(0.6) > c.risk(0.5));
    }
}

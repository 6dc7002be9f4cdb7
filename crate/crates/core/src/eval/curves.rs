use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::stats::{chi_squared_independence, spearman, ChiSquaredTest};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub mean_predicted: f64,
    pub observed_rate: f64,
    pub count: usize,
}

/// Observed event rate against mean predicted risk in equal-frequency bins,
/// with a count-weighted least-squares line through the bin points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub bins: Vec<CalibrationBin>,
    /// `None` when fewer than two bins have distinct predicted means.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Tied risks forced fewer bins than requested.
    pub merged: bool,
}

/// Equal-frequency binning of `risks`; equal risks never straddle a bin
/// boundary, so heavy ties produce fewer bins (flagged as merged).
pub fn calibration_curve(risks: &[f64], labels: &[bool], n_bins: usize) -> Result<CalibrationCurve, EvalError> {
    if risks.len() != labels.len() {
        return Err(EvalError::Length { scores: risks.len(), labels: labels.len() });
    }
    if risks.is_empty() || n_bins == 0 {
        return Err(EvalError::Input("calibration curve needs records and at least one bin".into()));
    }
    let mut order: Vec<usize> = (0..risks.len()).collect();
    order.sort_by(|&a, &b| risks[a].total_cmp(&risks[b]).then(a.cmp(&b)));
    let n = risks.len();
    let mut bins = Vec::with_capacity(n_bins);
    let mut start = 0;
    for b in 1..=n_bins {
        let mut end = (b * n / n_bins).max(start);
        while end < n && end > start && risks[order[end]] == risks[order[end - 1]] {
            end += 1;
        }
        if end == start {
            continue;
        }
        let members = &order[start..end];
        let count = members.len();
        bins.push(CalibrationBin {
            mean_predicted: members.iter().map(|&i| risks[i]).sum::<f64>() / count as f64,
            observed_rate: members.iter().filter(|&&i| labels[i]).count() as f64 / count as f64,
            count,
        });
        start = end;
    }
    let merged = bins.len() < n_bins.min(n);
    let (slope, intercept) = match weighted_line(&bins) {
        Some((s, i)) => (Some(s), Some(i)),
        None => (None, None),
    };
    Ok(CalibrationCurve { bins, slope, intercept, merged })
}

fn weighted_line(bins: &[CalibrationBin]) -> Option<(f64, f64)> {
    let w: f64 = bins.iter().map(|b| b.count as f64).sum();
    let mx = bins.iter().map(|b| b.count as f64 * b.mean_predicted).sum::<f64>() / w;
    let my = bins.iter().map(|b| b.count as f64 * b.observed_rate).sum::<f64>() / w;
    let sxx: f64 = bins.iter().map(|b| b.count as f64 * (b.mean_predicted - mx).powi(2)).sum();
    let sxy: f64 = bins.iter().map(|b| b.count as f64 * (b.mean_predicted - mx) * (b.observed_rate - my)).sum();
    if bins.len() < 2 || !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

pub const RELIABILITY_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub misclassified: usize,
    /// `None` for an empty bin.
    pub rate: Option<f64>,
}

/// Misclassification rate per tenth of the reliability range and a
/// chi-squared test of association between bin and misclassification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBinTable {
    pub bins: Vec<ReliabilityBin>,
    /// Over the non-empty bins, after merging sparse ones.
    pub chi_squared: ChiSquaredTest,
    /// Bins with an expected cell count below 1 were merged into a
    /// neighbour before the test.
    pub merged: bool,
    /// Spearman correlation between bin midpoint and misclassification rate
    /// over the non-empty bins.
    pub spearman: Option<f64>,
}

fn bin_index(reliability: f64) -> usize {
    ((reliability * RELIABILITY_BINS as f64).floor().max(0.0) as usize).min(RELIABILITY_BINS - 1)
}

pub fn reliability_bins(reliabilities: &[f64], misclassified: &[bool]) -> Result<ReliabilityBinTable, EvalError> {
    if reliabilities.len() != misclassified.len() {
        return Err(EvalError::Length { scores: reliabilities.len(), labels: misclassified.len() });
    }
    let mut counts = [0usize; RELIABILITY_BINS];
    let mut wrong = [0usize; RELIABILITY_BINS];
    for (&r, &m) in reliabilities.iter().zip(misclassified) {
        if !(0.0..=1.0).contains(&r) {
            return Err(EvalError::Input(format!("reliability {r} outside [0, 1]")));
        }
        let b = bin_index(r);
        counts[b] += 1;
        wrong[b] += usize::from(m);
    }
    let bins: Vec<ReliabilityBin> = (0..RELIABILITY_BINS)
        .map(|b| ReliabilityBin {
            lower: b as f64 / RELIABILITY_BINS as f64,
            upper: (b + 1) as f64 / RELIABILITY_BINS as f64,
            count: counts[b],
            misclassified: wrong[b],
            rate: (counts[b] > 0).then(|| wrong[b] as f64 / counts[b] as f64),
        })
        .collect();

    // rows (correct, wrong) for non-empty bins in order
    let mut rows: Vec<[f64; 2]> = bins
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| [(b.count - b.misclassified) as f64, b.misclassified as f64])
        .collect();
    let mut merged = false;
    loop {
        let total: f64 = rows.iter().flatten().sum();
        let cols = [rows.iter().map(|r| r[0]).sum::<f64>(), rows.iter().map(|r| r[1]).sum::<f64>()];
        let sparse = rows.iter().position(|r| {
            let n = r[0] + r[1];
            cols.iter().any(|&c| c > 0.0 && n * c / total < 1.0)
        });
        match sparse {
            Some(i) if rows.len() > 1 => {
                let j = if i + 1 < rows.len() { i + 1 } else { i - 1 };
                let row = rows.remove(i);
                let j = if j > i { j - 1 } else { j };
                rows[j][0] += row[0];
                rows[j][1] += row[1];
                merged = true;
            }
            _ => break,
        }
    }
    let table: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    let chi_squared = chi_squared_independence(&table);

    let (mid, rate): (Vec<f64>, Vec<f64>) =
        bins.iter().filter_map(|b| b.rate.map(|r| ((b.lower + b.upper) / 2.0, r))).unzip();
    let spearman = if mid.len() >= 2 { spearman(&mid, &rate) } else { None };
    Ok(ReliabilityBinTable { bins, chi_squared, merged, spearman })
}

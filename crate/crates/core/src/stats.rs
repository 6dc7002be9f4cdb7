//! Small statistical helpers shared by screening and evaluation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// 1-based ranks with ties given their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumTest {
    /// Mann-Whitney U of the first sample.
    pub u: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Two-sided Mann-Whitney rank-sum test, normal approximation with tie and
/// continuity corrections. `None` when every value is tied.
pub fn rank_sum_test(x: &[f64], y: &[f64]) -> Option<RankSumTest> {
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    if x.is_empty() || y.is_empty() {
        return None;
    }
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let r1: f64 = ranks[..x.len()].iter().sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let n = n1 + n2;

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return None;
    }
    let mean = n1 * n2 / 2.0;
    let diff = u - mean;
    let corrected = (diff.abs() - 0.5).max(0.0);
    let z = corrected.copysign(diff) / var.sqrt();
    let p = 2.0 * standard_normal().sf(z.abs());
    Some(RankSumTest { u, z, p_value: p.clamp(f64::MIN_POSITIVE, 1.0) })
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquaredTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-squared test of independence on a rows x columns table of
/// observed counts. Rows and columns summing to zero are dropped first.
pub fn chi_squared_independence(table: &[Vec<f64>]) -> ChiSquaredTest {
    let cols = table.first().map_or(0, Vec::len);
    let col_tot: Vec<f64> = (0..cols).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let keep_cols: Vec<usize> = (0..cols).filter(|&c| col_tot[c] > 0.0).collect();
    let rows: Vec<Vec<f64>> = table
        .iter()
        .map(|r| keep_cols.iter().map(|&c| r[c]).collect::<Vec<f64>>())
        .filter(|r| r.iter().sum::<f64>() > 0.0)
        .collect();
    if rows.len() < 2 || keep_cols.len() < 2 {
        return ChiSquaredTest { statistic: 0.0, dof: 0, p_value: 1.0 };
    }
    let total: f64 = rows.iter().flatten().sum();
    let row_tot: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let col_tot: Vec<f64> = (0..keep_cols.len()).map(|c| rows.iter().map(|r| r[c]).sum()).collect();
    let mut stat = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for (c, &o) in r.iter().enumerate() {
            let e = row_tot[i] * col_tot[c] / total;
            stat += (o - e) * (o - e) / e;
        }
    }
    let dof = (rows.len() - 1) * (keep_cols.len() - 1);
    let p = ChiSquared::new(dof as f64).expect("positive dof").sf(stat);
    ChiSquaredTest { statistic: stat, dof, p_value: p.clamp(f64::MIN_POSITIVE, 1.0) }
}

/// Spearman rank correlation; `None` if either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    pearson(&midranks(x), &midranks(y))
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Mean with a normal-approximation 95% interval: mean ± 1.96·sd/√n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
}

impl MeanCi {
    pub fn of(values: &[f64]) -> MeanCi {
        let n = values.len();
        if n == 0 {
            return MeanCi { mean: f64::NAN, lower: f64::NAN, upper: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let half = if n > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            1.96 * var.sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        MeanCi { mean, lower: mean - half, upper: mean + half, n }
    }
}

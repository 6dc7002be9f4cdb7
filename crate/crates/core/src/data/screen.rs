use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Cohort, DataError};
use crate::stats::{chi_squared_independence, rank_sum_test};

/// Univariate association of one feature with the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub p_value: f64,
    /// Set when the feature is constant and the test is undefined (p = 1).
    pub constant: bool,
}

/// Rank-sum test for continuous/ordinal features, chi-squared contingency
/// test for binary/nominal ones. Requires a complete, labeled cohort.
pub fn univariate_pvalues(cohort: &Cohort) -> Result<BTreeMap<String, PValue>, DataError> {
    let labels = cohort.labels()?;
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(DataError::Precondition("screening needs both outcome classes".into()));
    }
    let x = cohort.matrix()?;
    let mut out = BTreeMap::new();
    for (j, f) in cohort.schema.features.iter().enumerate() {
        let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
        let constant = col.iter().all(|&v| v == col[0]);
        let p = if constant {
            PValue { p_value: 1.0, constant: true }
        } else if f.kind.is_numeric() {
            let pos: Vec<f64> = col.iter().zip(&labels).filter(|(_, &l)| l).map(|(v, _)| *v).collect();
            let neg: Vec<f64> = col.iter().zip(&labels).filter(|(_, &l)| !l).map(|(v, _)| *v).collect();
            match rank_sum_test(&pos, &neg) {
                Some(t) => PValue { p_value: t.p_value, constant: false },
                None => PValue { p_value: 1.0, constant: true },
            }
        } else {
            let levels = f.level_count().unwrap_or(2);
            let mut table = vec![vec![0.0; 2]; levels];
            for (v, &l) in col.iter().zip(&labels) {
                table[*v as usize][l as usize] += 1.0;
            }
            PValue { p_value: chi_squared_independence(&table).p_value, constant: false }
        };
        out.insert(f.name.clone(), p);
    }
    Ok(out)
}

pub const DEFAULT_MISSING_CUTOFF: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingRate {
    pub feature: String,
    pub rate: f64,
    pub keep: bool,
}

/// Per-feature missing fraction; features above `cutoff` are marked for
/// exclusion.
pub fn missing_rate_screen(cohort: &Cohort, cutoff: f64) -> Vec<MissingRate> {
    let n = cohort.len().max(1) as f64;
    cohort
        .schema
        .features
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let missing = cohort.records.iter().filter(|r| r.values[j].is_none()).count();
            let rate = missing as f64 / n;
            MissingRate { feature: f.name.clone(), rate, keep: rate <= cutoff }
        })
        .collect()
}

use serde::{Deserialize, Serialize};

use super::LearnError;

/// Per-column min-max scaling to [0, 1] fitted on training data. Constant
/// columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in x {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Self { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub(crate) fn span(&self, j: usize) -> f64 {
        let s = self.max[j] - self.min[j];
        if s > 0.0 { s } else { 1.0 }
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>, LearnError> {
        if x.len() != self.dim() {
            return Err(LearnError::Dimension { expected: self.dim(), got: x.len() });
        }
        Ok(x.iter().enumerate().map(|(j, &v)| (v - self.min[j]) / self.span(j)).collect())
    }

    pub(crate) fn transform_all(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.transform(r).expect("rows match the fitted width")).collect()
    }
}

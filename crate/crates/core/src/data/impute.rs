use super::cohort::{collapse_one_hot, one_hot_expand};
use super::{Cohort, DataError, FeatureKind, FeatureSpec, Schema};

/// Result of [`knn_impute`]: the completed cohort plus which cells were
/// filled. Cell coordinates are `(record, feature)` in the target's schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Imputation {
    pub cohort: Cohort,
    pub imputed: Vec<(usize, usize)>,
    /// Cells for which no training donor shared an observed coordinate with
    /// the record; these got the training column mean (or mode).
    pub fallbacks: Vec<(usize, usize)>,
}

struct Ranges {
    span: Vec<f64>,
}

impl Ranges {
    fn of(train: &Cohort) -> Self {
        let d = train.schema.len();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for r in &train.records {
            for (j, v) in r.values.iter().enumerate() {
                if let Some(v) = v {
                    min[j] = min[j].min(*v);
                    max[j] = max[j].max(*v);
                }
            }
        }
        let span = min.iter().zip(&max).map(|(lo, hi)| if hi > lo { hi - lo } else { 1.0 }).collect();
        Self { span }
    }
}

/// Root-mean-square distance over the coordinates observed in both records,
/// after min-max scaling by the training range. Nominal coordinates count 0
/// when equal and 1 otherwise. `None` if no coordinate is shared.
fn distance(schema: &Schema, ranges: &Ranges, a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    let mut sum = 0.0;
    let mut shared = 0usize;
    for (j, f) in schema.features.iter().enumerate() {
        if let (Some(x), Some(y)) = (a[j], b[j]) {
            let diff = if f.kind == FeatureKind::Nominal {
                if x == y { 0.0 } else { 1.0 }
            } else {
                (x - y) / ranges.span[j]
            };
            sum += diff * diff;
            shared += 1;
        }
    }
    (shared > 0).then(|| (sum / shared as f64).sqrt())
}

/// Mean for continuous/ordinal (ordinal rounded to the nearest level), mode
/// for binary/nominal with ties going to the smaller level index.
fn aggregate(feature: &FeatureSpec, values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    match feature.kind {
        FeatureKind::Continuous => values.iter().sum::<f64>() / values.len() as f64,
        FeatureKind::Ordinal => {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let top = (feature.levels.len().max(1) - 1) as f64;
            mean.round().clamp(0.0, top)
        }
        FeatureKind::Binary | FeatureKind::Nominal => {
            let levels = feature.level_count().unwrap_or(2);
            let mut counts = vec![0usize; levels];
            for &v in values {
                counts[v as usize] += 1;
            }
            let mut best = 0;
            for (l, &c) in counts.iter().enumerate() {
                if c > counts[best] {
                    best = l;
                }
            }
            best as f64
        }
    }
}

/// Fills every missing cell of `target` from the `k` nearest records of
/// `train` that have that feature observed. Distances run over the
/// coordinates both records observe, min-max scaled by the training range;
/// ties are broken by training record order. `train` is never modified.
///
/// One-hot dummy groups are imputed as their underlying nominal feature, so
/// an imputed group always has exactly one active dummy.
pub fn knn_impute(train: &Cohort, target: &Cohort, k: usize) -> Result<Imputation, DataError> {
    if k == 0 {
        return Err(DataError::Precondition("k must be at least 1".into()));
    }
    if train.len() < k {
        return Err(DataError::Precondition(format!("k = {k} exceeds the {} training records", train.len())));
    }
    if train.schema.features != target.schema.features {
        return Err(DataError::Schema("training and target cohorts have different schemas".into()));
    }
    if target.records.iter().all(|r| r.is_complete()) {
        return Ok(Imputation { cohort: target.clone(), imputed: Vec::new(), fallbacks: Vec::new() });
    }

    let grouped = target.schema.features.iter().any(|f| f.dummy_of.is_some());
    let (train_c, target_c) = if grouped {
        (collapse_one_hot(train), collapse_one_hot(target))
    } else {
        (train.clone(), target.clone())
    };
    let schema = &train_c.schema;
    let ranges = Ranges::of(&train_c);

    let mut out = target_c.clone();
    let mut imputed = Vec::new();
    let mut fallbacks = Vec::new();
    let mut fallback_cache: Vec<Option<f64>> = vec![None; schema.len()];

    for (qi, query) in target_c.records.iter().enumerate() {
        if query.is_complete() {
            continue;
        }
        let mut ranked: Vec<(f64, usize)> = train_c
            .records
            .iter()
            .enumerate()
            .filter_map(|(ti, t)| distance(schema, &ranges, &query.values, &t.values).map(|d| (d, ti)))
            .collect();
        if ranked.is_empty() {
            return Err(DataError::NoOverlap(qi));
        }
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        for (j, feature) in schema.features.iter().enumerate() {
            if query.values[j].is_some() {
                continue;
            }
            let donors: Vec<f64> = ranked
                .iter()
                .filter_map(|&(_, ti)| train_c.records[ti].values[j])
                .take(k)
                .collect();
            let value = if donors.is_empty() {
                fallbacks.push((qi, j));
                match fallback_cache[j] {
                    Some(v) => v,
                    None => {
                        let col: Vec<f64> = train_c.column(j).into_iter().flatten().collect();
                        if col.is_empty() {
                            return Err(DataError::EmptyColumn(feature.name.clone()));
                        }
                        let v = aggregate(feature, &col);
                        fallback_cache[j] = Some(v);
                        v
                    }
                }
            } else {
                aggregate(feature, &donors)
            };
            out.records[qi].values[j] = Some(value);
            imputed.push((qi, j));
        }
    }

    if grouped {
        // map collapsed coordinates back onto the expanded columns
        let mut columns_of: Vec<Vec<usize>> = Vec::new();
        let mut last_group: Option<&str> = None;
        for (j, f) in target.schema.features.iter().enumerate() {
            match (&f.dummy_of, last_group) {
                (Some(g), Some(prev)) if g == prev => columns_of.last_mut().unwrap().push(j),
                _ => columns_of.push(vec![j]),
            }
            last_group = f.dummy_of.as_deref();
        }
        let expand = |cells: Vec<(usize, usize)>| -> Vec<(usize, usize)> {
            cells.into_iter().flat_map(|(r, c)| columns_of[c].iter().map(move |&e| (r, e))).collect()
        };
        let mut cohort = one_hot_expand(&out);
        cohort.schema = target.schema.clone();
        return Ok(Imputation { cohort, imputed: expand(imputed), fallbacks: expand(fallbacks) });
    }
    Ok(Imputation { cohort: out, imputed, fallbacks })
}

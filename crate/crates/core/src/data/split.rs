use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Cohort, DataError};

/// Deterministic per-repetition seed derived from a base seed (SplitMix64).
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn class_indices(cohort: &Cohort) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    let labels = cohort.labels()?;
    let pos = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg = (0..labels.len()).filter(|&i| !labels[i]).collect();
    Ok((pos, neg))
}

/// Splits a labeled cohort into train/test index lists, sampling each class
/// independently so both sets keep the cohort's event rate. Each class
/// contributes `round(train_fraction * class size)` records to the train set.
pub fn stratified_split(cohort: &Cohort, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::Precondition(format!("train fraction must be in (0,1), got {train_fraction}")));
    }
    let (mut pos, mut neg) = class_indices(cohort)?;
    for (name, class) in [("positive", &pos), ("negative", &neg)] {
        if class.len() < 2 {
            return Err(DataError::Precondition(format!(
                "stratified split needs at least 2 {name} records, found {}",
                class.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let n_pos = (train_fraction * pos.len() as f64).round() as usize;
    let n_neg = (train_fraction * neg.len() as f64).round() as usize;

    let mut train: Vec<usize> = pos[..n_pos].iter().chain(&neg[..n_neg]).copied().collect();
    let mut test: Vec<usize> = pos[n_pos..].iter().chain(&neg[n_neg..]).copied().collect();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// The full set of Monte-Carlo cross-validation splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub repetitions: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub index_pairs: Vec<(Vec<usize>, Vec<usize>)>,
}

pub fn make_split_plan(cohort: &Cohort, repetitions: usize, train_fraction: f64, seed: u64) -> Result<SplitPlan, DataError> {
    if repetitions == 0 {
        return Err(DataError::Precondition("at least one repetition is required".into()));
    }
    let index_pairs = (0..repetitions)
        .map(|i| stratified_split(cohort, train_fraction, sub_seed(seed, i as u64)))
        .collect::<Result<_, _>>()?;
    Ok(SplitPlan { repetitions, train_fraction, seed, index_pairs })
}

/// Keeps every positive of `train` and `round(ratio * positives)` negatives
/// drawn uniformly without replacement. The result is sorted.
pub fn undersample_negatives(train: &[usize], cohort: &Cohort, ratio: f64, seed: u64) -> Result<Vec<usize>, DataError> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(DataError::Precondition(format!("undersampling ratio must be positive, got {ratio}")));
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for &i in train {
        match cohort.records[i].label {
            Some(true) => pos.push(i),
            Some(false) => neg.push(i),
            None => return Err(DataError::Precondition(format!("record {i} has no outcome label"))),
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(DataError::Precondition("undersampling needs both classes in the training set".into()));
    }
    let wanted = (ratio * pos.len() as f64).round() as usize;
    if wanted > neg.len() {
        return Err(DataError::Precondition(format!(
            "ratio {ratio} needs {wanted} negatives but only {} are available",
            neg.len()
        )));
    }
    if wanted < neg.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        neg.shuffle(&mut rng);
        neg.truncate(wanted);
    }
    let mut out = pos;
    out.extend(neg);
    out.sort_unstable();
    Ok(out)
}

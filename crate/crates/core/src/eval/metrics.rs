use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::stats::midranks;

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<(), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::Length { scores: scores.len(), labels: labels.len() });
    }
    Ok(())
}

/// Area under the ROC curve as the Mann-Whitney probability that a random
/// positive outscores a random negative, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn npv(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fn_)
    }

    pub fn ppv(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    /// Counts from explicit binary predictions.
    pub fn from_predictions(predicted: &[bool], labels: &[bool]) -> Self {
        let mut c = ConfusionCounts::default();
        for (&p, &l) in predicted.iter().zip(labels) {
            match (p, l) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Confusion counts with `score >= cutoff` predicted positive.
pub fn confusion_at(scores: &[f64], labels: &[bool], cutoff: f64) -> ConfusionCounts {
    let predicted: Vec<bool> = scores.iter().map(|&s| s >= cutoff).collect();
    ConfusionCounts::from_predictions(&predicted, labels)
}

/// √(sensitivity · specificity).
pub fn geometric_mean(c: &ConfusionCounts) -> Result<f64, EvalError> {
    match (c.sensitivity(), c.specificity()) {
        (Some(se), Some(sp)) => Ok((se * sp).sqrt()),
        _ => Err(EvalError::SingleClass),
    }
}

/// Predictive values at a sensitivity-targeting cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveValues {
    pub npv: f64,
    pub ppv: f64,
    pub cutoff: f64,
    /// No predicted negatives; `npv` reported as 1.
    pub npv_undefined: bool,
    /// No predicted positives; `ppv` reported as 0.
    pub ppv_undefined: bool,
}

/// Picks the largest cutoff reaching `target_sensitivity` on the reference
/// (training) set, then reports NPV and PPV of `scores` at that cutoff.
pub fn npv_ppv_at_sensitivity(
    scores: &[f64],
    labels: &[bool],
    target_sensitivity: f64,
    reference_scores: &[f64],
    reference_labels: &[bool],
) -> Result<PredictiveValues, EvalError> {
    check_lengths(scores, labels)?;
    check_lengths(reference_scores, reference_labels)?;
    let mut pos: Vec<f64> = reference_scores.iter().zip(reference_labels).filter(|(_, &l)| l).map(|(s, _)| *s).collect();
    if pos.is_empty() {
        return Err(EvalError::SingleClass);
    }
    pos.sort_by(|a, b| b.total_cmp(a));
    // the k-th highest positive score keeps at least k positives above the cutoff
    let needed = ((target_sensitivity * pos.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let cutoff = pos[needed.min(pos.len()) - 1];
    let c = confusion_at(scores, labels, cutoff);
    Ok(PredictiveValues {
        npv: c.npv().unwrap_or(1.0),
        ppv: c.ppv().unwrap_or(0.0),
        cutoff,
        npv_undefined: c.npv().is_none(),
        ppv_undefined: c.ppv().is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive pairwise oracle.
    fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_cases() {
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
        let s = [0.9, 0.4, 0.4, 0.7, 0.1, 0.55, 0.4, 0.8];
        let l = [true, false, true, false, false, true, false, true];
        assert_eq!(roc_auc(&s, &l).unwrap(), pairwise_auc(&s, &l));
        assert!(matches!(roc_auc(&[0.1, 0.2], &[true, true]), Err(EvalError::SingleClass)));
    }

    #[test]
    fn confusion_extremes_and_hand_enumeration() {
        let s = [0.1, 0.4, 0.35, 0.8, 0.65, 0.2];
        let l = [false, false, true, true, false, true];
        let c = confusion_at(&s, &l, 0.0);
        assert_eq!((c.fn_, c.tn), (0, 0));
        let c = confusion_at(&s, &l, 1.0);
        assert_eq!((c.tp, c.fp), (0, 0));
        // >= 0.35: 0.4 (neg), 0.35 (pos), 0.8 (pos), 0.65 (neg)
        assert_eq!(confusion_at(&s, &l, 0.35), ConfusionCounts { tp: 2, tn: 1, fp: 2, fn_: 1 });
    }

    #[test]
    fn gm_closed_forms() {
        let c = ConfusionCounts { tp: 5, tn: 5, fp: 0, fn_: 0 };
        assert_eq!(geometric_mean(&c).unwrap(), 1.0);
        let c = ConfusionCounts { tp: 8, fn_: 2, tn: 6, fp: 4 };
        assert!((geometric_mean(&c).unwrap() - (0.48f64).sqrt()).abs() < 1e-15);
        let c = ConfusionCounts { tp: 0, fn_: 3, tn: 6, fp: 4 };
        assert_eq!(geometric_mean(&c).unwrap(), 0.0);
        assert!(geometric_mean(&ConfusionCounts { tp: 1, fn_: 1, tn: 0, fp: 0 }).is_err());
    }

    #[test]
    fn predictive_values() {
        let s = [0.1, 0.2, 0.3, 0.7, 0.8, 0.9];
        let l = [false, false, false, true, true, true];
        let pv = npv_ppv_at_sensitivity(&s, &l, 0.8, &s, &l).unwrap();
        assert_eq!((pv.npv, pv.ppv), (1.0, 1.0));
        assert_eq!(pv.cutoff, 0.7);

        let flat = [0.5; 10];
        let l: Vec<bool> = (0..10).map(|i| i < 2).collect();
        let pv = npv_ppv_at_sensitivity(&flat, &l, 0.8, &flat, &l).unwrap();
        assert!(pv.npv_undefined);
        assert_eq!(pv.npv, 1.0);
        assert!((pv.ppv - 0.2).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise_oracle(data in proptest::collection::vec((0u8..6, any::<bool>()), 2..30)) {
            let s: Vec<f64> = data.iter().map(|d| d.0 as f64 / 5.0).collect();
            let l: Vec<bool> = data.iter().map(|d| d.1).collect();
            prop_assume!(l.iter().any(|&x| x) && l.iter().any(|&x| !x));
            prop_assert_eq!(roc_auc(&s, &l).unwrap(), pairwise_auc(&s, &l));
        }

        #[test]
        fn auc_invariant_under_monotone_transform(data in proptest::collection::vec((-5f64..5.0, any::<bool>()), 2..40)) {
            let s: Vec<f64> = data.iter().map(|d| d.0).collect();
            let l: Vec<bool> = data.iter().map(|d| d.1).collect();
            prop_assume!(l.iter().any(|&x| x) && l.iter().any(|&x| !x));
            let t: Vec<f64> = s.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
            prop_assert_eq!(roc_auc(&s, &l).unwrap(), roc_auc(&t, &l).unwrap());
        }

        #[test]
        fn closed_forms_from_counts(tp in 0usize..50, tn in 0usize..50, fp in 0usize..50, fn_ in 0usize..50) {
            let c = ConfusionCounts { tp, tn, fp, fn_ };
            if tp + fn_ > 0 && tn + fp > 0 {
                let gm = ((tp as f64 / (tp + fn_) as f64) * (tn as f64 / (tn + fp) as f64)).sqrt();
                prop_assert_eq!(geometric_mean(&c).unwrap(), gm);
            }
            if tn + fn_ > 0 {
                prop_assert_eq!(c.npv().unwrap(), tn as f64 / (tn + fn_) as f64);
            }
            if tp + fp > 0 {
                prop_assert_eq!(c.ppv().unwrap(), tp as f64 / (tp + fp) as f64);
            }
        }
    }
}

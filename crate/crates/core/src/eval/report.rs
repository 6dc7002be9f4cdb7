use std::fmt::Write as _;

use super::mccv::EvalReport;
use crate::stats::MeanCi;

fn pct(ci: &MeanCi) -> String {
    format!("{:.2} [{:.2}, {:.2}]", 100.0 * ci.mean, 100.0 * ci.lower, 100.0 * ci.upper)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn to_csv<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    /// Human-readable summary; metrics are percentages with 95% intervals.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Monte-Carlo cross-validation: {} of {} repetitions completed, {:.0}% train, seed {}",
            self.completed,
            self.repetitions,
            100.0 * self.train_fraction,
            self.seed
        );
        let _ = writeln!(s, "cohort: {} records, prevalence {:.2}%", self.cohort_size, 100.0 * self.prevalence);
        for f in &self.failures {
            let _ = writeln!(s, "failed repetition {} ({}): {}", f.repetition, f.model, f.message);
        }
        for split in ["train", "test"] {
            let _ = writeln!(s, "\n{split} (mean [95% CI], %)");
            let _ = writeln!(s, "{:<16} {:>24} {:>24} {:>24} {:>24}", "model", "AUC", "GM", "NPV", "PPV");
            for m in &self.models {
                let c = if split == "train" { &m.train } else { &m.test };
                let _ = writeln!(s, "{:<16} {:>24} {:>24} {:>24} {:>24}", m.name, pct(&c.auc), pct(&c.gm), pct(&c.npv), pct(&c.ppv));
            }
        }
        if !self.deltas.is_empty() {
            let _ = writeln!(s, "\ntest differences, {} minus model (mean [95% CI], %)", self.reference);
            for d in &self.deltas {
                let _ = writeln!(s, "{:<16} {:>24} {:>24} {:>24} {:>24}", d.model, pct(&d.auc), pct(&d.gm), pct(&d.npv), pct(&d.ppv));
            }
        }
        let _ = writeln!(s, "\nstratification threshold and calibration slope (test)");
        for m in &self.models {
            let t = m.threshold.as_ref().map(pct).unwrap_or_else(|| "-".into());
            let slope = &m.calibration.slope;
            let _ = writeln!(s, "{:<16} threshold {t}  slope {:.2} [{:.2}, {:.2}]", m.name, slope.mean, slope.lower, slope.upper);
        }
        if let Some(r) = &self.reliability {
            let _ = writeln!(s, "\nreliability bins ({}, pooled test predictions)", self.reference);
            for b in &r.bins {
                let rate = b.rate.map(|v| format!("{:.2}%", 100.0 * v)).unwrap_or_else(|| "-".into());
                let _ = writeln!(s, "[{:>3.0}, {:>3.0}) n = {:>6}  misclassified {rate}", 100.0 * b.lower, 100.0 * b.upper, b.count);
            }
            let _ = writeln!(
                s,
                "chi-squared {:.3} on {} df, p = {:.3e}{}; Spearman rho {}",
                r.chi_squared.statistic,
                r.chi_squared.dof,
                r.chi_squared.p_value,
                if r.merged { " (sparse bins merged)" } else { "" },
                r.spearman.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
            );
        }
        s
    }

    /// One row per repetition, model and split.
    pub fn rows_csv(&self) -> String {
        to_csv(
            ["repetition", "model", "split", "auc", "gm", "npv", "ppv", "threshold", "sensitivity_cutoff", "npv_undefined", "ppv_undefined", "calibration_slope"],
            self.rows.iter().map(|r| {
                [
                    r.repetition.to_string(),
                    r.model.clone(),
                    format!("{:?}", r.split).to_lowercase(),
                    r.auc.to_string(),
                    r.gm.to_string(),
                    r.npv.to_string(),
                    r.ppv.to_string(),
                    opt(r.threshold),
                    r.sensitivity_cutoff.to_string(),
                    r.npv_undefined.to_string(),
                    r.ppv_undefined.to_string(),
                    opt(r.calibration_slope),
                ]
            }),
        )
    }

    /// Pooled calibration curves: `model, bin, predicted, observed, count`
    /// plus the interval bounds of the bin means.
    pub fn calibration_csv(&self) -> String {
        to_csv(
            ["model", "bin", "predicted", "observed", "count", "predicted_lower", "predicted_upper", "observed_lower", "observed_upper"],
            self.models.iter().flat_map(|m| {
                m.calibration.bins.iter().map(move |b| {
                    [
                        m.name.clone(),
                        b.bin.to_string(),
                        b.predicted.mean.to_string(),
                        b.observed.mean.to_string(),
                        b.mean_count.to_string(),
                        b.predicted.lower.to_string(),
                        b.predicted.upper.to_string(),
                        b.observed.lower.to_string(),
                        b.observed.upper.to_string(),
                    ]
                })
            }),
        )
    }

    pub fn reliability_csv(&self) -> Option<String> {
        self.reliability.as_ref().map(|r| {
            to_csv(
                ["lower", "upper", "count", "misclassified", "rate"],
                r.bins.iter().map(|b| {
                    [b.lower.to_string(), b.upper.to_string(), b.count.to_string(), b.misclassified.to_string(), opt(b.rate)]
                }),
            )
        })
    }
}

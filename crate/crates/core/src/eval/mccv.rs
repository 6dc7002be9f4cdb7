use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curves::{calibration_curve, reliability_bins, ReliabilityBinTable};
use super::metrics::{geometric_mean, npv_ppv_at_sensitivity, roc_auc, ConfusionCounts};
use super::point_score::{point_score_predict, PointScoreModel};
use super::EvalError;
use crate::data::{knn_impute, one_hot_expand, sub_seed, Cohort, SplitPlan};
use crate::learners::{ModelKind, TrainConfig};
use crate::pipeline::{fit_pipeline, select_strat_threshold, PipelineConfig, Stratum};
use crate::stats::MeanCi;

/// A model under comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompetitorKind {
    /// The rule-based pipeline.
    Proposed { config: PipelineConfig },
    Logistic { train: TrainConfig },
    Network { hidden: Vec<usize>, train: TrainConfig },
    /// Fixed user-supplied point score; nothing is trained.
    PointScore { model: PointScoreModel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Competitor {
    pub name: String,
    #[serde(flatten)]
    pub kind: CompetitorKind,
}

impl Competitor {
    pub fn proposed(config: PipelineConfig) -> Self {
        Self { name: "proposed".into(), kind: CompetitorKind::Proposed { config } }
    }

    /// Standard logistic regression, trained to convergence.
    pub fn logistic() -> Self {
        Self { name: "logistic".into(), kind: CompetitorKind::Logistic { train: baseline_logistic_config() } }
    }

    /// Standard network with two hidden layers of 8 units.
    pub fn network_8_8() -> Self {
        Self { name: "network".into(), kind: CompetitorKind::Network { hidden: vec![8, 8], train: baseline_network_config() } }
    }

    pub fn point_score(name: impl Into<String>, model: PointScoreModel) -> Self {
        Self { name: name.into(), kind: CompetitorKind::PointScore { model } }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Training settings of the logistic baseline: the default step and epoch
/// budget stop well short of the maximum-likelihood fit on unbalanced data.
pub fn baseline_logistic_config() -> TrainConfig {
    TrainConfig { learning_rate: 0.5, max_epochs: 50_000, tolerance: 1e-10, ..TrainConfig::default() }
}

pub fn baseline_network_config() -> TrainConfig {
    TrainConfig { learning_rate: 0.5, max_epochs: 5_000, ..TrainConfig::default() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MccvOptions {
    /// Neighbours for the baselines' imputation.
    pub knn_k: usize,
    /// Sensitivity reached on the training scores by the NPV/PPV cutoff.
    pub target_sensitivity: f64,
    pub calibration_bins: usize,
    /// Thread count; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for MccvOptions {
    fn default() -> Self {
        Self { knn_k: 10, target_sensitivity: 0.8, calibration_bins: 10, workers: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Metrics of one model on one split of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRow {
    pub repetition: usize,
    pub model: String,
    pub split: Split,
    pub auc: f64,
    pub gm: f64,
    pub npv: f64,
    pub ppv: f64,
    /// Risk cutoff between the low and high strata, when the model has one.
    pub threshold: Option<f64>,
    pub sensitivity_cutoff: f64,
    pub npv_undefined: bool,
    pub ppv_undefined: bool,
    pub calibration_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepFailure {
    pub repetition: usize,
    pub model: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCis {
    pub auc: MeanCi,
    pub gm: MeanCi,
    pub npv: MeanCi,
    pub ppv: MeanCi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledCalibrationBin {
    pub bin: usize,
    pub predicted: MeanCi,
    pub observed: MeanCi,
    pub mean_count: f64,
}

/// Test-set calibration curves averaged bin by bin over the repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledCalibration {
    pub bins: Vec<PooledCalibrationBin>,
    pub slope: MeanCi,
    /// Repetitions whose curve had merged bins and was left out of `bins`.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub train: MetricCis,
    pub test: MetricCis,
    pub threshold: Option<MeanCi>,
    pub calibration: PooledCalibration,
    pub npv_undefined: usize,
    pub ppv_undefined: usize,
}

/// Per-repetition test-metric differences `reference - model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub model: String,
    pub auc: MeanCi,
    pub gm: MeanCi,
    pub npv: MeanCi,
    pub ppv: MeanCi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cohort_size: usize,
    pub prevalence: f64,
    pub repetitions: usize,
    pub train_fraction: f64,
    pub seed: u64,
    /// Repetitions in which every model trained; only these are aggregated.
    pub completed: usize,
    pub failures: Vec<RepFailure>,
    /// Model the deltas are taken against: the first proposed model, or the
    /// first competitor if none is proposed.
    pub reference: String,
    pub models: Vec<ModelSummary>,
    pub deltas: Vec<DeltaSummary>,
    /// Pooled test predictions of the reference model, when it reports
    /// reliability.
    pub reliability: Option<ReliabilityBinTable>,
    pub rows: Vec<RepRow>,
}

type Matrix = Vec<Vec<f64>>;

struct ModelRun {
    train_risk: Vec<f64>,
    test_risk: Vec<f64>,
    train_high: Vec<bool>,
    test_high: Vec<bool>,
    threshold: Option<f64>,
    test_reliability: Option<Vec<f64>>,
}

struct RepOutcome {
    rows: Vec<(RepRow, RepRow)>,
    curves: Vec<Option<Vec<(f64, f64, usize)>>>,
    reliability: Option<(Vec<f64>, Vec<bool>)>,
}

#[allow(clippy::too_many_arguments)]
fn split_row(
    repetition: usize,
    model: &str,
    split: Split,
    risk: &[f64],
    high: &[bool],
    labels: &[bool],
    reference: (&[f64], &[bool]),
    opts: &MccvOptions,
) -> Result<RepRow, EvalError> {
    let pv = npv_ppv_at_sensitivity(risk, labels, opts.target_sensitivity, reference.0, reference.1)?;
    Ok(RepRow {
        repetition,
        model: model.to_string(),
        split,
        auc: roc_auc(risk, labels)?,
        gm: geometric_mean(&ConfusionCounts::from_predictions(high, labels))?,
        npv: pv.npv,
        ppv: pv.ppv,
        threshold: None,
        sensitivity_cutoff: pv.cutoff,
        npv_undefined: pv.npv_undefined,
        ppv_undefined: pv.ppv_undefined,
        calibration_slope: None,
    })
}

fn run_model(competitor: &Competitor, repetition: usize, train: &Cohort, test: &Cohort, k: usize) -> Result<ModelRun, String> {
    let train_labels = train.labels().map_err(|e| e.to_string())?;
    let encoded = || -> Result<(Matrix, Matrix), String> {
        let tr = knn_impute(train, train, k).map_err(|e| e.to_string())?.cohort;
        let te = knn_impute(train, test, k).map_err(|e| e.to_string())?.cohort;
        let tr = one_hot_expand(&tr).matrix().map_err(|e| e.to_string())?;
        let te = one_hot_expand(&te).matrix().map_err(|e| e.to_string())?;
        Ok((tr, te))
    };
    let learned = |kind: ModelKind, cfg: &TrainConfig| -> Result<ModelRun, String> {
        let (x_train, x_test) = encoded()?;
        let cfg = cfg.with_seed(sub_seed(cfg.seed, repetition as u64));
        let model = kind.fit(&x_train, &train_labels, &cfg).map_err(|e| e.to_string())?;
        let predict = |x: &[Vec<f64>]| -> Result<Vec<f64>, String> {
            x.iter().map(|r| model.predict_proba(r).map_err(|e| e.to_string())).collect()
        };
        let train_risk = predict(&x_train)?;
        let test_risk = predict(&x_test)?;
        let threshold = select_strat_threshold(&train_risk, &train_labels).map_err(|e| e.to_string())?;
        Ok(ModelRun {
            train_high: train_risk.iter().map(|&r| r >= threshold).collect(),
            test_high: test_risk.iter().map(|&r| r >= threshold).collect(),
            train_risk,
            test_risk,
            threshold: Some(threshold),
            test_reliability: None,
        })
    };
    match &competitor.kind {
        CompetitorKind::Proposed { config } => {
            let config = PipelineConfig { seed: sub_seed(config.seed, repetition as u64), ..config.clone() };
            let pipeline = fit_pipeline(train, &config).map_err(|e| e.to_string())?;
            let tr = pipeline.predict_cohort(train).map_err(|e| e.to_string())?;
            let te = pipeline.predict_cohort(test).map_err(|e| e.to_string())?;
            Ok(ModelRun {
                train_risk: tr.iter().map(|p| p.risk).collect(),
                test_risk: te.iter().map(|p| p.risk).collect(),
                train_high: tr.iter().map(|p| p.stratum == Stratum::High).collect(),
                test_high: te.iter().map(|p| p.stratum == Stratum::High).collect(),
                threshold: Some(pipeline.strat_threshold),
                test_reliability: Some(te.iter().map(|p| p.reliability).collect()),
            })
        }
        CompetitorKind::Logistic { train: cfg } => learned(ModelKind::Logistic, cfg),
        CompetitorKind::Network { hidden, train: cfg } => learned(ModelKind::Network { hidden: hidden.clone() }, cfg),
        CompetitorKind::PointScore { model } => {
            let score = |c: &Cohort| -> Result<(Vec<f64>, Vec<bool>), String> {
                let imputed = knn_impute(train, c, k).map_err(|e| e.to_string())?.cohort;
                let preds = imputed
                    .records
                    .iter()
                    .map(|r| point_score_predict(model, &imputed.schema, r).map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((preds.iter().map(|p| p.risk).collect(), preds.iter().map(|p| p.high).collect()))
            };
            let (train_risk, train_high) = score(train)?;
            let (test_risk, test_high) = score(test)?;
            Ok(ModelRun { train_risk, test_risk, train_high, test_high, threshold: None, test_reliability: None })
        }
    }
}

fn run_repetition(
    cohort: &Cohort,
    repetition: usize,
    indices: &(Vec<usize>, Vec<usize>),
    competitors: &[Competitor],
    reference: usize,
    opts: &MccvOptions,
) -> Result<RepOutcome, RepFailure> {
    let train = cohort.subset(&indices.0);
    let test = cohort.subset(&indices.1);
    let fail = |model: &str, message: String| RepFailure { repetition, model: model.to_string(), message };
    let train_labels = train.labels().map_err(|e| fail("", e.to_string()))?;
    let test_labels = test.labels().map_err(|e| fail("", e.to_string()))?;
    let mut out = RepOutcome { rows: Vec::new(), curves: Vec::new(), reliability: None };
    for (m, c) in competitors.iter().enumerate() {
        let run = run_model(c, repetition, &train, &test, opts.knn_k).map_err(|e| fail(&c.name, e))?;
        let reference_scores = (run.train_risk.as_slice(), train_labels.as_slice());
        let mut tr = split_row(repetition, &c.name, Split::Train, &run.train_risk, &run.train_high, &train_labels, reference_scores, opts)
            .map_err(|e| fail(&c.name, e.to_string()))?;
        let mut te = split_row(repetition, &c.name, Split::Test, &run.test_risk, &run.test_high, &test_labels, reference_scores, opts)
            .map_err(|e| fail(&c.name, e.to_string()))?;
        tr.threshold = run.threshold;
        te.threshold = run.threshold;
        let curve = calibration_curve(&run.test_risk, &test_labels, opts.calibration_bins).map_err(|e| fail(&c.name, e.to_string()))?;
        te.calibration_slope = curve.slope;
        out.curves.push(
            (!curve.merged).then(|| curve.bins.iter().map(|b| (b.mean_predicted, b.observed_rate, b.count)).collect()),
        );
        if m == reference {
            if let Some(rel) = run.test_reliability {
                let wrong = run.test_high.iter().zip(&test_labels).map(|(h, l)| h != l).collect();
                out.reliability = Some((rel, wrong));
            }
        }
        out.rows.push((tr, te));
    }
    Ok(out)
}

fn metric_cis(rows: &[&RepRow]) -> MetricCis {
    let of = |f: fn(&RepRow) -> f64| MeanCi::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
    MetricCis { auc: of(|r| r.auc), gm: of(|r| r.gm), npv: of(|r| r.npv), ppv: of(|r| r.ppv) }
}

/// Runs every competitor on every repetition of `plan` and aggregates the
/// results. Baselines are trained on the full (imputed) training split; the
/// proposed pipeline undersamples internally for its acceptance models.
/// A repetition in which any model fails is recorded and left out of every
/// aggregate, keeping the deltas paired.
pub fn run_mccv(cohort: &Cohort, plan: &SplitPlan, competitors: &[Competitor], opts: &MccvOptions) -> Result<EvalReport, EvalError> {
    if competitors.is_empty() {
        return Err(EvalError::Input("no competitors".into()));
    }
    let mut names = std::collections::BTreeSet::new();
    if let Some(c) = competitors.iter().find(|c| !names.insert(c.name.as_str())) {
        return Err(EvalError::Input(format!("competitor name {:?} used twice", c.name)));
    }
    if opts.calibration_bins == 0 || !(opts.target_sensitivity > 0.0 && opts.target_sensitivity <= 1.0) {
        return Err(EvalError::Input("invalid MCCV options".into()));
    }
    let reference = competitors.iter().position(|c| matches!(c.kind, CompetitorKind::Proposed { .. })).unwrap_or(0);

    let job = || -> Vec<Result<RepOutcome, RepFailure>> {
        plan.index_pairs
            .par_iter()
            .enumerate()
            .map(|(i, pair)| {
                let r = run_repetition(cohort, i, pair, competitors, reference, opts);
                info!("repetition {i} done");
                r
            })
            .collect()
    };
    let outcomes = match opts.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| EvalError::Input(e.to_string()))?
            .install(job),
        None => job(),
    };

    let mut failures = Vec::new();
    let mut done = Vec::new();
    for o in outcomes {
        match o {
            Ok(o) => done.push(o),
            Err(f) => {
                warn!("repetition {} failed for {}: {}", f.repetition, f.model, f.message);
                failures.push(f);
            }
        }
    }

    let mut models = Vec::new();
    for (m, c) in competitors.iter().enumerate() {
        let train: Vec<&RepRow> = done.iter().map(|o| &o.rows[m].0).collect();
        let test: Vec<&RepRow> = done.iter().map(|o| &o.rows[m].1).collect();
        let thresholds: Vec<f64> = train.iter().filter_map(|r| r.threshold).collect();
        let full: Vec<&Vec<(f64, f64, usize)>> = done.iter().filter_map(|o| o.curves[m].as_ref()).collect();
        let bins = (0..opts.calibration_bins)
            .filter(|_| !full.is_empty())
            .map(|b| PooledCalibrationBin {
                bin: b,
                predicted: MeanCi::of(&full.iter().map(|c| c[b].0).collect::<Vec<_>>()),
                observed: MeanCi::of(&full.iter().map(|c| c[b].1).collect::<Vec<_>>()),
                mean_count: full.iter().map(|c| c[b].2 as f64).sum::<f64>() / full.len() as f64,
            })
            .collect();
        let slopes: Vec<f64> = test.iter().filter_map(|r| r.calibration_slope).collect();
        models.push(ModelSummary {
            name: c.name.clone(),
            train: metric_cis(&train),
            test: metric_cis(&test),
            threshold: (!thresholds.is_empty()).then(|| MeanCi::of(&thresholds)),
            calibration: PooledCalibration { bins, slope: MeanCi::of(&slopes), skipped: done.len() - full.len() },
            npv_undefined: test.iter().filter(|r| r.npv_undefined).count(),
            ppv_undefined: test.iter().filter(|r| r.ppv_undefined).count(),
        });
    }

    let deltas = competitors
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != reference)
        .map(|(m, c)| {
            let diff = |f: fn(&RepRow) -> f64| {
                MeanCi::of(&done.iter().map(|o| f(&o.rows[reference].1) - f(&o.rows[m].1)).collect::<Vec<_>>())
            };
            DeltaSummary { model: c.name.clone(), auc: diff(|r| r.auc), gm: diff(|r| r.gm), npv: diff(|r| r.npv), ppv: diff(|r| r.ppv) }
        })
        .collect();

    let (rel, wrong): (Vec<f64>, Vec<bool>) = done
        .iter()
        .filter_map(|o| o.reliability.as_ref())
        .flat_map(|(r, w)| r.iter().copied().zip(w.iter().copied()))
        .unzip();
    let reliability = if rel.is_empty() { None } else { Some(reliability_bins(&rel, &wrong)?) };

    let rows = done.iter().flat_map(|o| o.rows.iter().flat_map(|(a, b)| [a.clone(), b.clone()])).collect();
    Ok(EvalReport {
        cohort_size: cohort.len(),
        prevalence: cohort.prevalence(),
        repetitions: plan.repetitions,
        train_fraction: plan.train_fraction,
        seed: plan.seed,
        completed: done.len(),
        failures,
        reference: competitors[reference].name.clone(),
        models,
        deltas,
        reliability,
        rows,
    })
}

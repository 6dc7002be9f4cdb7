//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rulerisk::data::{knn_impute, make_split_plan, undersample_negatives};
use rulerisk::eval::{calibration_curve, roc_auc, run_mccv};
use rulerisk::learners::{fit_logistic, MinMaxScaler, NetworkModel};
use rulerisk::pipeline::{fit_calibration, fit_pipeline, load_pipeline, mortality_score, reliability, save_pipeline};
use rulerisk::rules::acceptance_labels;
use rulerisk::synth::generate_cohort;
use rulerisk::{
    Aggregator, Cohort, CohortSpec, Competitor, FeatureSpec, FittedPipeline, MccvOptions, PatientRecord, PipelineConfig,
    Rule, Schema, TrainConfig,
};
use rulerisk_cli::service::{router, PredictResponse};
use serde_json::Value;
use tower::ServiceExt;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg.into()) }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

// ---------------------------------------------------------------- worked examples

fn table2() -> Outcome {
    let outputs = [false, false, true, true, false];
    let cases = [([0.73, 0.91, 0.41, 0.34, 0.70], 0.34, 0.4050), ([0.88, 0.95, 0.24, 0.11, 0.91], 0.26, 0.7383)];
    let mut shown = Vec::new();
    for (acc, want_s, want_rel) in cases {
        let s = mortality_score(&outputs, &acc).map_err(|e| e.to_string())?.s;
        let rel = reliability(&outputs, &acc).map_err(|e| e.to_string())?;
        let rounded = (s * 100.0).round() / 100.0;
        ensure((rounded - want_s).abs() <= 0.005, format!("s = {s:.4}, expected {want_s}"))?;
        ensure((rel - want_rel).abs() <= 0.0005, format!("reliability = {rel:.5}, expected {want_rel}"))?;
        shown.push(format!("s={rounded:.2} rel={rel:.4}"));
    }
    Ok(shown.join("; "))
}

fn table1() -> Outcome {
    // centroids at 0 and 1 make the feature value its own normalized distance
    let rule = Rule::from_centroids("x", 1.0, 0.0, Aggregator::Mean).map_err(|e| e.to_string())?;
    let distances = [0.32, 0.12, 0.73, 0.64, 0.20];
    let outputs: Vec<bool> = distances.iter().map(|&d| rule.evaluate(d).output).collect();
    ensure(outputs == [false, false, true, true, false], format!("outputs {outputs:?}"))?;
    let acceptance = acceptance_labels(&outputs, false);
    ensure(acceptance == [true, true, false, false, true], format!("acceptances {acceptance:?}"))?;
    Ok("outputs (0,0,1,1,0), acceptances (1,1,0,0,1)".into())
}

fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst6, mut worst8, mut equal_sides) = (0.0f64, 0.0f64, 0usize);
    for i in 0..20_000 {
        let (p, q) = if i < 10_000 {
            (rng.random_range(1..12), rng.random_range(1..12))
        } else {
            let p = rng.random_range(1..12);
            (p, p)
        };
        let mut outputs: Vec<bool> = (0..p + q).map(|k| k < p).collect();
        for k in (1..outputs.len()).rev() {
            outputs.swap(k, rng.random_range(0..=k));
        }
        let acc: Vec<f64> = outputs.iter().map(|_| rng.random_range(0.0..=1.0)).collect();
        let score = mortality_score(&outputs, &acc).map_err(|e| e.to_string())?;
        let rel = reliability(&outputs, &acc).map_err(|e| e.to_string())?;
        let r = (p + q) as f64;
        let mean = |side: bool, n: usize| outputs.iter().zip(&acc).filter(|(o, _)| **o == side).map(|(_, a)| a).sum::<f64>() / n as f64;
        let decomposed = p as f64 / r * mean(true, p) - q as f64 / r * mean(false, q);
        worst6 = worst6.max((score.t - decomposed).abs());
        if p == q {
            equal_sides += 1;
            worst8 = worst8.max((rel - (2.0 * score.t).abs()).abs()).max((rel - (4.0 * score.s - 2.0).abs()).abs());
        }
    }
    ensure(worst6 <= 1e-12, format!("decomposition error {worst6:e}"))?;
    ensure(worst8 <= 1e-12, format!("p = q reliability error {worst8:e}"))?;
    Ok(format!("20000 instances, max decomposition error {worst6:.1e}; {equal_sides} p=q instances, max error {worst8:.1e}"))
}

// ---------------------------------------------------------------- oracles

fn auc_pairwise(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

fn oracle_schema() -> Schema {
    Schema::new(vec![
        FeatureSpec::continuous("age"),
        FeatureSpec::binary("stroke"),
        FeatureSpec::ordinal("killip", ["I", "II", "III", "IV"]),
        FeatureSpec::nominal("dx", ["UA", "NSTEMI", "STEMI"]),
        FeatureSpec::continuous("hr"),
    ])
    .unwrap()
}

fn random_records(rng: &mut ChaCha8Rng, n: usize, missing: f64) -> Vec<PatientRecord> {
    (0..n)
        .map(|_| {
            let full = [
                rng.random_range(30..90) as f64,
                rng.random_range(0..2) as f64,
                rng.random_range(0..4) as f64,
                rng.random_range(0..3) as f64,
                rng.random_range(50.0..140.0f64).round(),
            ];
            let mut values: Vec<Option<f64>> = full.iter().map(|&v| (!rng.random_bool(missing)).then_some(v)).collect();
            if values.iter().all(Option::is_none) {
                values[0] = Some(full[0]);
            }
            PatientRecord::new(values, Some(rng.random_bool(0.3)))
        })
        .collect()
}

/// Scans every training record: RMS of the shared scaled coordinates
/// (nominal mismatch counts 1), stable order by (distance, index), first k
/// donors with the cell observed, then mean / rounded mean / mode.
fn knn_brute_force(train: &Cohort, target: &Cohort, k: usize) -> Vec<Vec<f64>> {
    let schema = &train.schema;
    let d = schema.len();
    let spans: Vec<f64> = (0..d)
        .map(|j| {
            let col: Vec<f64> = train.column(j).into_iter().flatten().collect();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo { hi - lo } else { 1.0 }
        })
        .collect();
    target
        .records
        .iter()
        .map(|q| {
            let mut ranked = Vec::new();
            for (ti, t) in train.records.iter().enumerate() {
                let (mut sum, mut shared) = (0.0, 0);
                for (j, span) in spans.iter().enumerate() {
                    if let (Some(a), Some(b)) = (q.values[j], t.values[j]) {
                        let diff = if schema.features[j].kind == rulerisk::FeatureKind::Nominal {
                            f64::from(u8::from(a != b))
                        } else {
                            (a - b) / span
                        };
                        sum += diff * diff;
                        shared += 1;
                    }
                }
                if shared > 0 {
                    ranked.push(((sum / shared as f64).sqrt(), ti));
                }
            }
            ranked.sort_by(|a, b| a.partial_cmp(b).unwrap());
            (0..d)
                .map(|j| {
                    if let Some(v) = q.values[j] {
                        return v;
                    }
                    let donors: Vec<f64> = ranked.iter().filter_map(|&(_, ti)| train.records[ti].values[j]).take(k).collect();
                    let f = &schema.features[j];
                    let mean = donors.iter().sum::<f64>() / donors.len() as f64;
                    match f.kind {
                        rulerisk::FeatureKind::Continuous => mean,
                        rulerisk::FeatureKind::Ordinal => mean.round(),
                        _ => {
                            let levels = f.level_count().unwrap();
                            let counts: Vec<usize> = (0..levels).map(|l| donors.iter().filter(|&&v| v == l as f64).count()).collect();
                            let top = *counts.iter().max().unwrap();
                            counts.iter().position(|&c| c == top).unwrap() as f64
                        }
                    }
                })
                .collect()
        })
        .collect()
}

/// Newton-Raphson on the log-likelihood with an intercept column.
fn irls(x: &[Vec<f64>], y: &[bool]) -> Vec<f64> {
    let d = x[0].len() + 1;
    let mut beta = vec![0.0; d];
    for _ in 0..100 {
        let mut g = vec![0.0; d];
        let mut h = vec![vec![0.0; d]; d];
        for (row, &label) in x.iter().zip(y) {
            let xi: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
            let p = sigmoid(xi.iter().zip(&beta).map(|(a, b)| a * b).sum());
            for a in 0..d {
                g[a] += (f64::from(u8::from(label)) - p) * xi[a];
                for b in 0..d {
                    h[a][b] += p * (1.0 - p) * xi[a] * xi[b];
                }
            }
        }
        let mut m: Vec<Vec<f64>> = h.iter().zip(&g).map(|(r, gi)| r.iter().copied().chain([*gi]).collect()).collect();
        for c in 0..d {
            let piv = (c..d).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
            m.swap(c, piv);
            for r in 0..d {
                if r != c {
                    let f = m[r][c] / m[c][c];
                    let pivot_row = m[c].clone();
                    m[r].iter_mut().zip(&pivot_row).skip(c).for_each(|(x, p)| *x -= f * p);
                }
            }
        }
        let step: Vec<f64> = (0..d).map(|i| m[i][d] / m[i][i]).collect();
        beta.iter_mut().zip(&step).for_each(|(b, s)| *b += s);
        if step.iter().all(|s| s.abs() < 1e-13) {
            break;
        }
    }
    beta
}

fn oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    let mut auc_sets = 0;
    for _ in 0..2000 {
        let n = rng.random_range(2..=30);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..8)) / 8.0).collect();
        let got = roc_auc(&scores, &labels).map_err(|e| e.to_string())?;
        let want = auc_pairwise(&scores, &labels);
        ensure(got == want, format!("AUC {got} vs pairwise {want}"))?;
        auc_sets += 1;
    }

    let mut knn_cases = 0;
    for _ in 0..200 {
        let n = rng.random_range(10..=50);
        let train = Cohort::new(oracle_schema(), random_records(&mut rng, n, 0.15)).unwrap();
        let target = Cohort::new(oracle_schema(), random_records(&mut rng, 20, 0.3)).unwrap();
        let k = rng.random_range(1..=10);
        let got = knn_impute(&train, &target, k).map_err(|e| e.to_string())?;
        let want = knn_brute_force(&train, &target, k);
        for (r, w) in got.cohort.records.iter().zip(&want) {
            ensure(r.dense().as_ref() == Some(w), format!("k-NN {:?} vs brute force {w:?}", r.values))?;
        }
        knn_cases += 1;
    }

    let mut worst_coef = 0.0f64;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let truth = [0.5, 1.2, -0.4, 0.8];
        let x: Vec<Vec<f64>> =
            (0..300).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(0.0..5.0), rng.random_range(-1.0..1.0)]).collect();
        let y: Vec<bool> = x.iter().map(|r| rng.random_bool(sigmoid(truth[0] + truth[1] * r[0] + truth[2] * r[1] + truth[3] * r[2]))).collect();
        let cfg = TrainConfig { max_epochs: 200_000, learning_rate: 2.0, tolerance: 1e-15, ..TrainConfig::default() };
        let model = fit_logistic(&x, &y, &cfg).map_err(|e| e.to_string())?;
        let (b0, w) = model.raw_coefficients();
        let oracle = irls(&x, &y);
        let got: Vec<f64> = std::iter::once(b0).chain(w).collect();
        for (g, o) in got.iter().zip(&oracle) {
            worst_coef = worst_coef.max((g - o).abs());
        }
    }
    ensure(worst_coef < 1e-3, format!("logistic vs IRLS max |diff| {worst_coef:e}"))?;

    let mut worst_rel = 0.0f64;
    for (hidden, seed) in [(vec![8, 4], 1u64), (vec![8, 8], 2), (vec![3], 3), (vec![], 4)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..12).map(|_| (0..5).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let y: Vec<bool> = (0..12).map(|_| rng.random_bool(0.5)).collect();
        let scaler = MinMaxScaler::fit(&x);
        let mut net = NetworkModel::initialize(scaler, &hidden, seed);
        let (_, grad) = net.loss_and_gradient(&x, &y, 1e-3);
        let base = net.parameters();
        let eps = 1e-6;
        for k in 0..base.len() {
            let mut p = base.clone();
            p[k] = base[k] + eps;
            net.set_parameters(&p);
            let up = net.loss_and_gradient(&x, &y, 1e-3).0;
            p[k] = base[k] - eps;
            net.set_parameters(&p);
            let down = net.loss_and_gradient(&x, &y, 1e-3).0;
            let fd = (up - down) / (2.0 * eps);
            worst_rel = worst_rel.max((fd - grad[k]).abs() / grad[k].abs().max(fd.abs()).max(1e-6));
        }
        net.set_parameters(&base);
    }
    ensure(worst_rel < 1e-4, format!("network gradient max relative error {worst_rel:e}"))?;

    Ok(format!(
        "AUC exact on {auc_sets} sets; k-NN exact on {knn_cases} cohorts; logistic vs IRLS {worst_coef:.1e}; gradient rel. error {worst_rel:.1e}"
    ))
}

// ---------------------------------------------------------------- calibration

fn calibration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 100_000;
    let s: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let y: Vec<bool> = s.iter().map(|&v| rng.random_bool(sigmoid(-6.0 + 8.0 * v))).collect();
    let fit = fit_calibration(&s, &y).map_err(|e| e.to_string())?;
    ensure((fit.slope - 8.0).abs() <= 0.3, format!("β1 = {:.3}", fit.slope))?;

    let risks: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let labels: Vec<bool> = risks.iter().map(|&r| rng.random_bool(r)).collect();
    let curve = calibration_curve(&risks, &labels, 10).map_err(|e| e.to_string())?;
    let slope = curve.slope.ok_or("curve slope undefined")?;
    ensure((slope - 1.0).abs() <= 0.05, format!("curve slope {slope:.4}"))?;
    Ok(format!("β1 = {:.3} (β0 = {:.3}); curve slope {slope:.4}", fit.slope, fit.intercept))
}

// ---------------------------------------------------------------- protocol

fn protocol() -> Outcome {
    let cohort = generate_cohort(&CohortSpec::default()).map_err(|e| e.to_string())?;
    let prevalence = cohort.prevalence();
    let plan = make_split_plan(&cohort, 100, 0.8, 2019).map_err(|e| e.to_string())?;
    let labels = cohort.labels().map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (rep, (train, test)) in plan.index_pairs.iter().enumerate() {
        ensure(train.len() + test.len() == cohort.len(), format!("rep {rep} does not partition the cohort"))?;
        for part in [train, test] {
            let pos = part.iter().filter(|&&i| labels[i]).count() as f64;
            let dev = (pos - prevalence * part.len() as f64).abs();
            worst = worst.max(dev);
            ensure(dev <= 1.0, format!("rep {rep}: {pos} positives in {} records", part.len()))?;
        }
        let kept = undersample_negatives(train, &cohort, 1.5, rep as u64).map_err(|e| e.to_string())?;
        let pos_train = train.iter().filter(|&&i| labels[i]).count();
        let pos_kept = kept.iter().filter(|&&i| labels[i]).count();
        let neg_kept = kept.len() - pos_kept;
        ensure(pos_kept == pos_train, format!("rep {rep}: kept {pos_kept} of {pos_train} positives"))?;
        ensure(
            neg_kept == (1.5 * pos_train as f64).round() as usize,
            format!("rep {rep}: {neg_kept} negatives for {pos_train} positives"),
        )?;
        ensure(kept.iter().all(|i| train.contains(i)), format!("rep {rep}: undersample left the train set"))?;
    }
    Ok(format!("100 splits, max deviation from prevalence {worst:.2} patients; undersampling exact"))
}

// ---------------------------------------------------------------- desk-scale experiment

fn desk_scale() -> Outcome {
    let start = Instant::now();
    let cohort = generate_cohort(&CohortSpec::default()).map_err(|e| e.to_string())?;
    let prevalence = cohort.prevalence();
    ensure(cohort.len() == 1111 && cohort.positives() == 55, format!("cohort {} / {}", cohort.len(), cohort.positives()))?;
    let plan = make_split_plan(&cohort, 100, 0.8, 2019).map_err(|e| e.to_string())?;
    let config = PipelineConfig { seed: 2019, ..PipelineConfig::default() };
    let competitors = [Competitor::proposed(config), Competitor::logistic()];
    let report = run_mccv(&cohort, &plan, &competitors, &MccvOptions::default()).map_err(|e| e.to_string())?;
    ensure(report.completed == 100, format!("{} of 100 repetitions completed", report.completed))?;

    let proposed = &report.models[0];
    let delta = report.deltas.iter().find(|d| d.model == "logistic").ok_or("no logistic delta")?;
    let auc = proposed.test.auc.mean;
    let threshold = proposed.threshold.ok_or("no threshold")?.mean;
    let rel = report.reliability.as_ref().ok_or("no reliability bins")?;
    let rho = rel.spearman.ok_or("Spearman undefined")?;
    let p = rel.chi_squared.p_value;
    let summary = format!(
        "ΔAUC {:+.4}, AUC {auc:.4}, threshold {threshold:.4} in [{prevalence:.4}, {:.4}], ρ {rho:.3}, χ² p {p:.1e}, {:.0}s",
        delta.auc.mean,
        3.0 * prevalence,
        start.elapsed().as_secs_f64()
    );
    ensure(delta.auc.mean.abs() < 0.05, format!("(a) {summary}"))?;
    ensure(auc > 0.70, format!("(b) {summary}"))?;
    ensure((prevalence..=3.0 * prevalence).contains(&threshold), format!("(c) {summary}"))?;
    ensure(rho < -0.7 && p < 0.01, format!("(d) {summary}"))?;
    Ok(summary)
}

// ---------------------------------------------------------------- artifact and service

fn random_patient(pipeline: &FittedPipeline, rng: &mut ChaCha8Rng) -> PatientRecord {
    let values = pipeline
        .schema
        .features
        .iter()
        .map(|f| {
            if rng.random_bool(0.1) {
                return None;
            }
            Some(match f.level_count() {
                Some(n) => rng.random_range(0..n) as f64,
                None => {
                    let col = pipeline.reference.column(pipeline.schema.index_of(&f.name).unwrap());
                    let seen: Vec<f64> = col.into_iter().flatten().collect();
                    let lo = seen.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = seen.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    rng.random_range(lo..=hi).round()
                }
            })
        })
        .collect();
    PatientRecord::new(values, None)
}

fn request_of(pipeline: &FittedPipeline, record: &PatientRecord) -> BTreeMap<String, Value> {
    pipeline
        .schema
        .features
        .iter()
        .zip(&record.values)
        .map(|(f, v)| {
            let value = match v {
                None => Value::Null,
                Some(x) if f.kind.is_categorical() && !f.levels.is_empty() => Value::from(f.render_value(*x)),
                Some(x) => Value::from(*x),
            };
            (f.name.clone(), value)
        })
        .collect()
}

fn round_trip() -> Outcome {
    let cohort = generate_cohort(&CohortSpec::default()).map_err(|e| e.to_string())?;
    let pipeline = fit_pipeline(&cohort, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("model.json");
    save_pipeline(&pipeline, &path).map_err(|e| e.to_string())?;
    let loaded = load_pipeline(&path).map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let records: Vec<PatientRecord> = (0..100).map(|_| random_patient(&pipeline, &mut rng)).collect();
    let runtime = tokio::runtime::Builder::new_current_thread().build().map_err(|e| e.to_string())?;
    let app = router(loaded.clone());
    for (i, record) in records.iter().enumerate() {
        let original = pipeline.predict_patient(record).map_err(|e| e.to_string())?;
        let reloaded = loaded.predict_patient(record).map_err(|e| e.to_string())?;
        let bits = |p: &rulerisk::Prediction| {
            let mut v = vec![p.score_t.to_bits(), p.score_s.to_bits(), p.risk.to_bits(), p.reliability.to_bits()];
            v.extend(p.per_rule.iter().flat_map(|r| [r.normalized_distance.to_bits(), r.acceptance.to_bits(), u64::from(r.output)]));
            v
        };
        ensure(bits(&original) == bits(&reloaded) && original == reloaded, format!("record {i}: reloaded prediction differs"))?;

        let body = serde_json::to_string(&request_of(&pipeline, record)).unwrap();
        let (status, bytes) = runtime.block_on(async {
            let req = Request::post("/predict").header("content-type", "application/json").body(Body::from(body)).unwrap();
            let resp = app.clone().oneshot(req).await.unwrap();
            let status = resp.status();
            (status, resp.into_body().collect().await.unwrap().to_bytes())
        });
        ensure(status == StatusCode::OK, format!("record {i}: service status {status}"))?;
        let resp: PredictResponse = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
        let same = resp.risk == original.risk
            && resp.reliability == original.reliability
            && resp.score_s == original.score_s
            && resp.stratum == original.stratum
            && resp.per_rule.len() == original.per_rule.len()
            && resp.per_rule.iter().zip(&original.per_rule).all(|(a, b)| a.acceptance == b.acceptance && (a.output == 1) == b.output);
        ensure(same, format!("record {i}: service response differs from library"))?;
    }
    Ok("100 records bit-identical after reload; service responses identical".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("worked score and reliability example", table2),
        ("rule outputs and acceptances example", table1),
        ("score decomposition identities", identities),
        ("oracle equivalences", oracles),
        ("calibration recovery", calibration),
        ("protocol invariants", protocol),
        ("desk-scale MCCV experiment", desk_scale),
        ("artifact round trip and service parity", round_trip),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

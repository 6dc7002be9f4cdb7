use super::*;
use crate::synth::{generate_cohort, CohortSpec};

fn cohort(n: usize, seed: u64) -> Cohort {
    generate_cohort(&CohortSpec { n, seed, prevalence: 0.2, ..CohortSpec::default() }).unwrap()
}

fn quick() -> PipelineConfig {
    PipelineConfig { train: TrainConfig { max_epochs: 300, ..TrainConfig::default() }, ..PipelineConfig::default() }
}

#[test]
fn strat_threshold_cases() {
    assert_eq!(select_strat_threshold(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 0.5);
    let t = select_strat_threshold(&[0.1, 0.2, 0.8, 0.9], &[true, true, false, false]).unwrap();
    assert!((t - 0.15).abs() < 1e-15);
    assert!(select_strat_threshold(&[0.1, 0.2], &[true, true]).is_err());
}

#[test]
fn fitted_structure() {
    let c = cohort(400, 3);
    let p = fit_pipeline(&c, &quick()).unwrap();
    assert_eq!(p.rules.len(), 6);
    assert_eq!(p.acceptance_models.len(), 6);
    for m in &p.acceptance_models {
        match m {
            Model::Network(n) => assert_eq!(n.layer_sizes(), vec![6, 8, 4, 1]),
            Model::Logistic(_) => panic!("expected networks"),
        }
    }
    assert!(p.calibration.slope.is_finite() && p.calibration.intercept.is_finite());
    assert!(p.strat_threshold > 0.0 && p.strat_threshold < 1.0);
    for r in &p.rules {
        assert_eq!(r.threshold, (r.positive_centroid + r.negative_centroid) / 2.0);
    }
}

#[test]
fn deterministic_artifacts() {
    let c = cohort(300, 4);
    let a = pipeline_to_json(&fit_pipeline(&c, &quick()).unwrap());
    let b = pipeline_to_json(&fit_pipeline(&c, &quick()).unwrap());
    assert_eq!(a, b);
}

#[test]
fn prediction_invariants() {
    let c = cohort(300, 5);
    let p = fit_pipeline(&c, &quick()).unwrap();
    for pred in p.predict_cohort(&c).unwrap() {
        assert_eq!(pred.score_s, (pred.score_t + 1.0) / 2.0);
        assert_eq!(pred.risk, p.calibration.risk(pred.score_s));
        assert_eq!(pred.stratum == Stratum::High, pred.risk >= p.strat_threshold);
        assert!((0.0..=1.0).contains(&pred.reliability));
        assert!(pred.risk > 0.0 && pred.risk < 1.0);
    }
}

#[test]
fn negative_centroid_record_is_all_survival() {
    let c = cohort(300, 6);
    let p = fit_pipeline(&c, &quick()).unwrap();
    let values = p.rules.iter().map(|r| Some(r.negative_centroid)).collect();
    // ordinal centroids are not valid levels; evaluate rules directly
    let values: Vec<Option<f64>> = values;
    assert!(p.rules.iter().zip(&values).all(|(r, v)| !r.evaluate(v.unwrap()).output));
}

#[test]
fn missing_values_are_imputed_and_named() {
    let c = cohort(300, 7);
    let p = fit_pipeline(&c, &quick()).unwrap();
    let mut rec = c.records[0].clone();
    rec.values[2] = None;
    let pred = p.predict_patient(&rec).unwrap();
    assert_eq!(pred.imputed, vec!["sbp".to_string()]);
    assert!(pred.risk.is_finite());
    rec.values.pop();
    assert!(p.predict_patient(&rec).is_err());
}

#[test]
fn single_and_batch_agree() {
    let c = cohort(200, 8);
    let p = fit_pipeline(&c, &quick()).unwrap();
    let batch = p.predict_cohort(&c).unwrap();
    for (r, b) in c.records.iter().zip(&batch).take(20) {
        assert_eq!(&p.predict_patient(r).unwrap(), b);
    }
}

#[test]
fn artifact_round_trip_and_errors() {
    let c = cohort(200, 9);
    let p = fit_pipeline(&c, &quick()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_pipeline(&p, &path).unwrap();
    let q = load_pipeline(&path).unwrap();
    assert_eq!(p.predict_cohort(&c).unwrap(), q.predict_cohort(&c).unwrap());

    let text = std::fs::read_to_string(&path).unwrap();
    assert!(matches!(pipeline_from_json(&text[..text.len() / 2]), Err(PipelineError::Corrupt(_))));
    let newer = text.replacen("\"version\": \"1.0\"", "\"version\": \"2.0\"", 1);
    match pipeline_from_json(&newer) {
        Err(PipelineError::Version { found, supported }) => assert_eq!((found.as_str(), supported.as_str()), ("2.0", "1.0")),
        other => panic!("{other:?}"),
    }
    let minor = text.replacen("\"version\": \"1.0\"", "\"version\": \"1.3\"", 1);
    assert!(pipeline_from_json(&minor).is_ok());
}

#[test]
fn nominal_features_get_one_rule_per_level() {
    use crate::data::FeatureSpec;
    let schema = Schema::new(vec![FeatureSpec::continuous("x"), FeatureSpec::nominal("site", ["a", "b", "c"])]).unwrap();
    let records = (0..120)
        .map(|i| {
            let label = i % 3 == 0;
            let x = (i % 17) as f64 + if label { 6.0 } else { 0.0 };
            let site = if label { (i % 2) as f64 } else if i % 4 == 0 { 0.0 } else { 2.0 };
            PatientRecord::new(vec![Some(x), Some(site)], Some(label))
        })
        .collect();
    let c = Cohort::new(schema, records).unwrap();
    let cfg = PipelineConfig { acceptance_model: ModelKind::Logistic, ..quick() };
    let p = fit_pipeline(&c, &cfg).unwrap();
    let names: Vec<&str> = p.rules.iter().map(|r| r.feature.as_str()).collect();
    assert_eq!(names, ["x", "site=a", "site=b", "site=c"]);
    assert_eq!(p.input_dim(), 4);
}

#[test]
fn degenerate_rule_is_dropped() {
    let mut c = cohort(200, 10);
    for r in &mut c.records {
        r.values[1] = Some(50.0);
    }
    let p = fit_pipeline(&c, &quick()).unwrap();
    assert_eq!(p.rules.len(), 5);
    assert!(p.warnings.iter().any(|w| w.contains("age")));
}

#[test]
fn unknown_rule_feature_rejected() {
    let c = cohort(100, 11);
    let cfg = PipelineConfig { rule_features: Some(vec!["weight".into()]), ..quick() };
    assert!(matches!(fit_pipeline(&c, &cfg), Err(PipelineError::Input(_))));
}

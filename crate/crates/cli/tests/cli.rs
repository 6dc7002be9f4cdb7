use std::path::Path;
use std::process::{Command, Output};

fn rulerisk(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rulerisk")).args(args).env("RULERISK_OUT", out_dir).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not a JSON line: {line}"))
}

#[test]
fn synth_train_predict_screen() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cohort = d.join("cohort.csv");
    let schema = d.join("schema.toml");
    let out = rulerisk(&["synth", "--n", "400", "--prevalence", "0.15", "--out", s(&cohort), "--schema-out", s(&schema)], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let a = d.join("a.json");
    let b = d.join("b.json");
    for path in [&a, &b] {
        let out = rulerisk(
            &["train", "--data", s(&cohort), "--schema", s(&schema), "--out", s(path), "--seed", "7", "--epochs", "300"],
            d,
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let patient = d.join("patient.csv");
    std::fs::write(&patient, "diagnosis,age,sbp,hr,killip,stroke\nSTEMI,72,155,99,I,yes\nUA,50,,70,I,no\n").unwrap();
    let out = rulerisk(&["predict", "--model", s(&a), "--input", s(&patient)], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Predicted mortality risk:"));
    assert!(text.contains("Predicted reliability:"));
    assert!(text.contains("Stratification:"));
    assert!(text.contains("Imputed: sbp"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("predictions.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
    assert_eq!(json[0]["per_rule"].as_array().unwrap().len(), 6);

    let out = rulerisk(&["screen", "--data", s(&cohort), "--schema", s(&schema)], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(d.join("screen.csv")).unwrap();
    assert_eq!(table.lines().count(), 7);
}

#[test]
fn mccv_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = d.join("spec.toml");
    let out = rulerisk(&["synth", "--n", "300", "--prevalence", "0.2", "--spec-out", s(&spec)], d);
    assert!(out.status.success());
    let report = d.join("report");
    let out = rulerisk(
        &["mccv", "--synth", s(&spec), "--reps", "3", "--baselines", "logistic", "--epochs", "200", "--workers", "2", "--out", s(&report)],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = std::fs::read_to_string(report.join("repetitions.csv")).unwrap();
    // header + 3 reps x 2 models x 2 splits
    assert_eq!(rows.lines().count(), 1 + 12);
    for f in ["report.json", "report.txt", "calibration.csv", "reliability.csv"] {
        assert!(report.join(f).exists(), "{f}");
    }
}

#[test]
fn errors_are_single_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = rulerisk(&["train", "--bogus"], d);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "usage");

    let out = rulerisk(&["predict", "--model", "/nonexistent/model.json", "--input", "x.csv"], d);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
    assert_eq!(error_line(&out)["error"], "io");

    let bad = d.join("bad.json");
    std::fs::write(&bad, "{\"format\": \"rulerisk-pipeline\", \"version\": \"1.0\", \"rul").unwrap();
    let out = rulerisk(&["serve", "--model", s(&bad)], d);
    assert_eq!(error_line(&out)["error"], "artifact");

    let cohort = d.join("c.csv");
    let schema = d.join("s.toml");
    assert!(rulerisk(&["synth", "--n", "50", "--out", s(&cohort), "--schema-out", s(&schema)], d).status.success());
    let text = std::fs::read_to_string(&cohort).unwrap().replacen(",0\n", ",2\n", 1);
    std::fs::write(&cohort, text).unwrap();
    let out = rulerisk(&["train", "--data", s(&cohort), "--schema", s(&schema)], d);
    let e = error_line(&out);
    assert_eq!(e["error"], "data");
    assert!(e["message"].as_str().unwrap().contains("row"));
}

#[test]
fn partial_config_file_uses_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cohort = d.join("cohort.csv");
    let schema = d.join("schema.toml");
    assert!(rulerisk(&["synth", "--n", "300", "--prevalence", "0.2", "--out", s(&cohort), "--schema-out", s(&schema)], d).status.success());
    let config = d.join("config.toml");
    std::fs::write(&config, "median_features = [\"age\"]\n\n[acceptance_model]\nkind = \"logistic\"\n\n[train]\nmax_epochs = 300\n").unwrap();
    let model = d.join("model.json");
    let out = rulerisk(&["train", "--data", s(&cohort), "--schema", s(&schema), "--config", s(&config), "--out", s(&model)], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let artifact: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(artifact["acceptance_models"].as_array().unwrap().len(), 6);

    std::fs::write(&config, "[train]\nepochs = 3\n").unwrap();
    let out = rulerisk(&["train", "--data", s(&cohort), "--schema", s(&schema), "--config", s(&config)], d);
    assert_eq!(error_line(&out)["error"], "config");
}

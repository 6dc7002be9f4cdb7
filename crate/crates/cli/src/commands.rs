use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rulerisk::data::{knn_impute, load_cohort, make_split_plan, missing_rate_screen, univariate_pvalues, write_cohort, Schema};
use rulerisk::eval::{run_mccv, Competitor, MccvOptions, PointScoreModel};
use rulerisk::learners::ModelKind;
use rulerisk::pipeline::{fit_pipeline, load_pipeline, save_pipeline, PipelineConfig};
use rulerisk::synth::{generate_cohort, inject_missing, CohortSpec};

use crate::render::{predictions_json, predictions_text};
use crate::{
    io_err, output_path, AcceptanceModel, Baseline, CliError, Command, MccvArgs, PipelineArgs, PredictArgs, ScreenArgs, ServeArgs,
    SynthArgs, TrainArgs,
};

pub(crate) fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Mccv(a) => mccv(a),
        Command::Screen(a) => screen(a),
        Command::Synth(a) => synth(a),
        Command::Serve(a) => serve(a),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn pipeline_config(args: &PipelineArgs, seed: u64) -> Result<PipelineConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => toml::from_str(&read_text(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => PipelineConfig::default(),
    };
    if let Some(m) = args.model {
        config.acceptance_model = match m {
            AcceptanceModel::Network => ModelKind::network_8_4(),
            AcceptanceModel::Logistic => ModelKind::Logistic,
        };
    }
    if let Some(k) = args.k {
        config.knn_k = k;
    }
    if let Some(r) = args.ratio {
        config.undersample_ratio = r;
    }
    if let Some(r) = &args.rules {
        config.rule_features = Some(r.clone());
    }
    if let Some(m) = &args.median {
        config.median_features = m.clone();
    }
    if let Some(e) = args.epochs {
        config.train.max_epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        config.train.learning_rate = lr;
    }
    config.seed = seed;
    Ok(config)
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let schema = Schema::load(&args.data.schema)?;
    let cohort = load_cohort(&args.data.data, &schema)?;
    let config = pipeline_config(&args.pipeline, args.seed)?;
    let pipeline = fit_pipeline(&cohort, &config)?;
    let out = output_path(args.out.as_deref(), "model.json");
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    save_pipeline(&pipeline, &out)?;
    println!(
        "{} rules, calibration ({:.4}, {:.4}), threshold {:.2}%",
        pipeline.rules.len(),
        pipeline.calibration.intercept,
        pipeline.calibration.slope,
        100.0 * pipeline.strat_threshold
    );
    for (rule, text) in pipeline.rules.iter().zip(pipeline.rule_descriptions()) {
        println!("  {:<16} {text}", rule.feature);
    }
    for w in &pipeline.warnings {
        println!("warning: {w}");
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn predict(args: PredictArgs) -> Result<(), CliError> {
    let pipeline = load_pipeline(&args.model)?;
    let cohort = load_cohort(&args.input, &pipeline.schema)?;
    let predictions = pipeline.predict_cohort(&cohort)?;
    let out = output_path(args.out.as_deref(), "predictions.json");
    let json = predictions_json(&pipeline, &cohort, &predictions);
    write_text(&out, &json)?;
    match args.format {
        crate::OutputFormat::Text => print!("{}", predictions_text(&pipeline, &cohort, &predictions)),
        crate::OutputFormat::Json => println!("{json}"),
    }
    info!("wrote {}", out.display());
    Ok(())
}

fn mccv(args: MccvArgs) -> Result<(), CliError> {
    let cohort = match (&args.data, &args.schema) {
        (Some(data), Some(schema)) => load_cohort(data, &Schema::load(schema)?)?,
        (None, _) => {
            let spec = match &args.synth {
                Some(p) => CohortSpec::load(p)?,
                None => CohortSpec::default(),
            };
            generate_cohort(&spec)?
        }
        (Some(_), None) => return Err(CliError::Usage("--data requires --schema".into())),
    };
    let config = pipeline_config(&args.pipeline, args.seed)?;
    let mut competitors = vec![Competitor::proposed(config.clone())];
    for b in &args.baselines {
        let c = match b {
            Baseline::Logistic => Competitor::logistic(),
            Baseline::Network => Competitor::network_8_8(),
        };
        if competitors.iter().all(|x| x.name != c.name) {
            competitors.push(c);
        }
    }
    if let Some(p) = &args.point_score {
        let model = PointScoreModel::from_toml_str(&read_text(p)?)?;
        competitors.push(Competitor::point_score("point_score", model));
    }
    let plan = make_split_plan(&cohort, args.reps, args.train_fraction, args.seed)?;
    let opts = MccvOptions { knn_k: config.knn_k, workers: args.workers, ..MccvOptions::default() };
    let report = run_mccv(&cohort, &plan, &competitors, &opts)?;

    let dir = args.out.clone().unwrap_or_else(|| match std::env::var_os(crate::OUT_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from("mccv"),
    });
    write_text(&dir.join("report.json"), &report.to_json())?;
    let text = report.to_text();
    write_text(&dir.join("report.txt"), &text)?;
    write_text(&dir.join("repetitions.csv"), &report.rows_csv())?;
    write_text(&dir.join("calibration.csv"), &report.calibration_csv())?;
    if let Some(csv) = report.reliability_csv() {
        write_text(&dir.join("reliability.csv"), &csv)?;
    }
    print!("{text}");
    println!("wrote {}", dir.display());
    if !report.failures.is_empty() {
        return Err(CliError::Convergence(format!(
            "{} of {} repetitions failed; see {}",
            report.failures.len(),
            report.repetitions,
            dir.join("report.json").display()
        )));
    }
    Ok(())
}

fn screen(args: ScreenArgs) -> Result<(), CliError> {
    let schema = Schema::load(&args.data.schema)?;
    let cohort = load_cohort(&args.data.data, &schema)?;
    let missing = missing_rate_screen(&cohort, args.missing_cutoff);
    let complete = knn_impute(&cohort, &cohort, args.k)?.cohort;
    let pvalues = univariate_pvalues(&complete)?;
    let mut csv = String::from("feature,kind,p_value,constant,missing_rate,keep\n");
    println!("{:<16} {:>12} {:>10}  keep", "feature", "p-value", "missing");
    for (f, m) in schema.features.iter().zip(&missing) {
        let p = &pvalues[&f.name];
        let kind = format!("{:?}", f.kind).to_lowercase();
        csv.push_str(&format!("{},{kind},{},{},{},{}\n", f.name, p.p_value, p.constant, m.rate, m.keep));
        println!("{:<16} {:>12.3e} {:>9.2}%  {}", f.name, p.p_value, 100.0 * m.rate, if m.keep { "yes" } else { "no" });
    }
    let out = output_path(args.out.as_deref(), "screen.csv");
    write_text(&out, &csv)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let mut spec = match &args.spec {
        Some(p) => CohortSpec::load(p)?,
        None => CohortSpec::default(),
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(p) = args.prevalence {
        spec.prevalence = p;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let mut cohort = generate_cohort(&spec)?;
    if args.missing_rate > 0.0 {
        cohort = inject_missing(&cohort, args.missing_rate, spec.seed.wrapping_add(1))?;
    }
    let out = output_path(args.out.as_deref(), "cohort.csv");
    let mut buf = Vec::new();
    write_cohort(&cohort, &mut buf)?;
    write_text(&out, &String::from_utf8(buf).expect("csv output is utf-8"))?;
    if let Some(p) = &args.schema_out {
        write_text(p, &cohort.schema.to_toml_string())?;
    }
    if let Some(p) = &args.spec_out {
        write_text(p, &spec.to_toml_string())?;
    }
    println!("{} records, {} positive; wrote {}", cohort.len(), cohort.positives(), out.display());
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let pipeline = load_pipeline(&args.model)?;
    let addr = format!("{}:{}", args.bind, args.port);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io { path: PathBuf::from(&addr), source: e })?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr).await.map_err(io_err(Path::new(&addr)))?;
        println!("listening on http://{addr}");
        axum::serve(listener, crate::service::router(pipeline))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(io_err(Path::new(&addr)))
    })
}

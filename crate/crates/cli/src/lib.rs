//! Command-line workflows and the HTTP scoring service.

mod commands;
mod render;
pub mod service;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

/// Seed used whenever `--seed` is not given.
pub const DEFAULT_SEED: u64 = 2019;
/// Directory for outputs whose path is not given explicitly.
pub const OUT_DIR_ENV: &str = "RULERISK_OUT";

#[derive(Debug, Parser)]
#[command(name = "rulerisk", version, about = "Interpretable rule-based clinical risk prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a pipeline on a labeled cohort and write the artifact.
    Train(TrainArgs),
    /// Score patients with a fitted pipeline.
    Predict(PredictArgs),
    /// Monte-Carlo cross-validation of the pipeline against baselines.
    Mccv(MccvArgs),
    /// Univariate p-values and missing rates per feature.
    Screen(ScreenArgs),
    /// Generate a synthetic cohort.
    Synth(SynthArgs),
    /// Serve a fitted pipeline over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AcceptanceModel {
    Network,
    Logistic,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Comma-separated cohort with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Feature schema (TOML).
    #[arg(long)]
    pub schema: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Pipeline configuration (TOML); flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Acceptance-model family.
    #[arg(long, value_enum)]
    pub model: Option<AcceptanceModel>,
    /// Neighbours used for k-NN imputation.
    #[arg(long)]
    pub k: Option<usize>,
    /// Negatives kept per positive for acceptance-model training.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Features that get a rule (comma-separated); all by default.
    #[arg(long, value_delimiter = ',')]
    pub rules: Option<Vec<String>>,
    /// Features whose centroids use the median (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub median: Option<Vec<String>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Artifact path [default: $RULERISK_OUT/model.json or ./model.json].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Pipeline artifact written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Patients in the cohort format; the label column is optional.
    #[arg(long)]
    pub input: PathBuf,
    /// Machine-readable predictions [default: $RULERISK_OUT/predictions.json or ./predictions.json].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format printed on standard output.
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Logistic,
    Network,
}

#[derive(Debug, Args)]
pub struct MccvArgs {
    /// Cohort file; a synthetic cohort is generated when omitted.
    #[arg(long, requires = "schema")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Synthetic cohort spec (TOML) used when --data is omitted; the
    /// built-in acute coronary syndrome spec by default.
    #[arg(long, conflicts_with = "data")]
    pub synth: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Baseline models (comma-separated).
    #[arg(long, value_enum, value_delimiter = ',', default_value = "logistic,network")]
    pub baselines: Vec<Baseline>,
    /// Point-score comparator config (TOML).
    #[arg(long)]
    pub point_score: Option<PathBuf>,
    /// Output directory [default: $RULERISK_OUT or ./mccv].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScreenArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Features missing in a larger fraction of records are flagged.
    #[arg(long, default_value_t = rulerisk::data::DEFAULT_MISSING_CUTOFF)]
    pub missing_cutoff: f64,
    /// Neighbours used to complete the cohort before testing.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// CSV table [default: $RULERISK_OUT/screen.csv or ./screen.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Cohort spec (TOML); the built-in acute coronary syndrome spec by default.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub prevalence: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of feature cells blanked after generation.
    #[arg(long, default_value_t = 0.0)]
    pub missing_rate: f64,
    /// Cohort CSV [default: $RULERISK_OUT/cohort.csv or ./cohort.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the matching schema here.
    #[arg(long)]
    pub schema_out: Option<PathBuf>,
    /// Also write the effective spec here.
    #[arg(long)]
    pub spec_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] rulerisk::DataError),
    #[error(transparent)]
    Pipeline(#[from] rulerisk::PipelineError),
    #[error(transparent)]
    Eval(#[from] rulerisk::EvalError),
    #[error("{0}")]
    Convergence(String),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use rulerisk::PipelineError as P;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Data(_) => "data",
            CliError::Pipeline(P::Learn { .. } | P::Calibration(_)) => "convergence",
            CliError::Pipeline(P::Corrupt(_) | P::Version { .. }) => "artifact",
            CliError::Pipeline(P::Io { .. }) => "io",
            CliError::Pipeline(_) => "pipeline",
            CliError::Eval(_) => "eval",
            CliError::Convergence(_) => "convergence",
            CliError::Config(_) => "config",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// One JSON object on one line: `{"error":kind,"message":text}`.
    pub fn to_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string(&Line { error: self.kind(), message: self.to_string().replace('\n', " ") })
            .expect("plain strings serialize")
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// `explicit`, else `name` inside `$RULERISK_OUT`, else `name` in the
/// working directory.
pub fn output_path(explicit: Option<&Path>, name: &str) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(name),
            _ => PathBuf::from(name),
        },
    }
}

/// Parses `argv` and runs the subcommand. Returns the process exit code;
/// failures print one machine-parseable line on standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            let err = CliError::Usage(first.to_string());
            eprintln!("{}", err.to_line());
            return err.exit_code();
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_line());
            e.exit_code()
        }
    }
}

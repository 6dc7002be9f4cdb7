//! Cohort ingestion, encoding, splitting, undersampling, imputation and
//! univariate screening.

mod cohort;
mod impute;
mod schema;
mod screen;
mod split;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub(crate) use cohort::check_record;
pub use cohort::{collapse_one_hot, load_cohort, one_hot_expand, read_cohort, write_cohort, Cohort, PatientRecord};
pub use impute::{knn_impute, Imputation};
pub use schema::{FeatureKind, FeatureSpec, Schema};
pub(crate) use schema::format_number;
pub use screen::{missing_rate_screen, univariate_pvalues, MissingRate, PValue, DEFAULT_MISSING_CUTOFF};
pub use split::{make_split_plan, stratified_split, sub_seed, undersample_negatives, SplitPlan};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema: {0}")]
    Schema(String),
    #[error("row {row}, column {column:?}: {message}")]
    Cell { row: usize, column: String, message: String },
    #[error("header: unknown column {0:?}")]
    UnknownColumn(String),
    #[error("header: missing column {0:?}")]
    MissingColumn(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("record {index} does not conform to the schema: {message}")]
    Record { index: usize, message: String },
    #[error("{0}")]
    Precondition(String),
    #[error("record {0} shares no observed feature with any training record")]
    NoOverlap(usize),
    #[error("feature {0:?} is missing in every training record")]
    EmptyColumn(String),
}

impl DataError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io { path: path.to_path_buf(), source }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("run `{run_id}` has {available} samples but {required} are needed (short by {deficit})", deficit = required - available)]
    TooFewSamples {
        run_id: String,
        available: usize,
        required: usize,
    },

    #[error("invalid run `{run_id}`: {reason}")]
    InvalidRun { run_id: String, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("timestamps must be strictly increasing (violated at index {index})")]
    NonMonotoneTime { index: usize },

    #[error("invalid label {0}; labels must be 0 or 1")]
    InvalidLabel(u8),

    #[error("dataset contains a single class ({class}); both classes are required")]
    SingleClass { class: u8 },

    #[error("no samples of class {class} in the ground truth; {rate} is undefined")]
    EmptyClass { class: u8, rate: &'static str },

    #[error("feature count mismatch: model expects {expected}, got {actual}")]
    FeatureMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coalition size {size} is out of range for {features} features")]
    CoalitionSize { size: usize, features: usize },

    #[error("{features} features would require 2^{features} evaluations; at most {cap} features are supported")]
    TooManyFeatures { features: usize, cap: usize },

    #[error("subset-model table has no entry for coalition mask {0:#b}")]
    MissingSubsetModel(u32),

    #[error("efficiency violated: base + sum(phi) = {total}, explained output = {output}")]
    Efficiency { total: f64, output: f64 },

    #[error("unsupported model format: {0}")]
    ModelFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{} run(s) failed: {}", .0.len(), format_failures(.0))]
    Runs(Vec<(String, String)>),

    #[error("config: {0}")]
    Config(String),
}

fn format_failures(failures: &[(String, String)]) -> String {
    failures
        .iter()
        .map(|(id, reason)| format!("{id} ({reason})"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

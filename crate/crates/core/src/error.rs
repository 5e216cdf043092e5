use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the analysis pipeline and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A frequency fell outside the range covered by a curve.
    #[error("range error: {what} at {freq} Hz is outside [{min}, {max}] Hz")]
    Range {
        what: String,
        freq: f64,
        min: f64,
        max: f64,
    },

    /// Inputs are individually valid but incompatible with each other.
    #[error("contract error: {0}")]
    Contract(String),

    /// The record is sampled too slowly to honour the sample-rate/cutoff ratio.
    #[error(
        "insufficient sample rate: {sample_rate} Hz < {ratio} x {cutoff} Hz cutoff"
    )]
    InsufficientRate {
        sample_rate: f64,
        cutoff: f64,
        ratio: f64,
    },

    /// Non-finite or otherwise unusable sample data.
    #[error("data error: {0}")]
    Data(String),

    /// Synthesis requested at a rate that would alias a component.
    #[error("aliasing: component at {freq} Hz needs fs > {min_rate} Hz, got {sample_rate} Hz")]
    Aliasing {
        freq: f64,
        min_rate: f64,
        sample_rate: f64,
    },

    /// A band has zero equipment amplitude but a nonzero predicted amplitude.
    #[error("inconsistent band {band}: equipment amplitude is zero but predicted amplitude is {predicted}")]
    Inconsistency { band: usize, predicted: f64 },

    /// A transfer function does not cover the frequencies the recipe needs.
    #[error("coverage error: {0}")]
    Coverage(String),

    /// A numerical step produced an unusable result.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Malformed input file.
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    /// A required column is missing from a CSV header.
    #[error("{}: missing column `{column}`", path.display())]
    MissingColumn { path: PathBuf, column: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// Wraps an error with the cutoff frequency whose pipeline raised it.
    #[error("cutoff {cutoff} Hz: {source}")]
    AtCutoff {
        cutoff: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric(_) => true,
            Error::AtCutoff { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

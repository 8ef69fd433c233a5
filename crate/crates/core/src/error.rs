use std::fmt;

use thiserror::Error;

/// Stage of the three-stage adaptive estimator, used to label errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Initialization,
    SecondDerivative,
    PlugIn,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Initialization => "initialization",
            Stage::SecondDerivative => "second-derivative",
            Stage::PlugIn => "plug-in",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("window at index {index} holds {found} samples, need at least {required}")]
    InsufficientWindow {
        index: usize,
        found: usize,
        required: usize,
    },

    #[error("degenerate regression window at t = {t}")]
    DegenerateWindow { t: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("optimal halfwidth is unbounded (|g''| = 0)")]
    Unbounded,

    #[error("fit needs at least 3 grid points below the cutoff, found {found}")]
    FitUnderdetermined { found: usize },

    #[error("grid configuration error: {0}")]
    Grid(String),

    #[error("duplicate time {time} at row {row}")]
    DuplicateTime { time: f64, row: usize },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("series has {found} samples, need at least {required}")]
    TooShort { found: usize, required: usize },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error once stage and replication labels are stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::Replication { source, .. } => source.root(),
            other => other,
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::InsufficientWindow { .. } => "insufficient-window",
            Error::DegenerateWindow { .. } => "degenerate-window",
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Unbounded => "unbounded",
            Error::FitUnderdetermined { .. } => "fit-underdetermined",
            Error::Grid(_) => "grid",
            Error::DuplicateTime { .. } => "duplicate-time",
            Error::Parse { .. } => "parse",
            Error::TooShort { .. } => "too-short",
            Error::InvalidSeries(_) => "invalid-series",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Stage { .. } | Error::Replication { .. } => unreachable!(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{what} out of domain: {value} ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// A detector or run configuration violates an invariant.
    #[error("invalid configuration: {field} = {value}: {reason}")]
    Config {
        field: String,
        value: String,
        reason: String,
    },

    /// Malformed tabulated input (efficiency curve rows, power ranges).
    #[error("format error at row {row}: {reason}")]
    Format { row: usize, reason: String },

    #[error("recursion over {slots} slots needs ~{work} steps, over the budget of {budget}; enable truncation")]
    WorkBudget { slots: usize, work: u64, budget: u64 },

    #[error("steady state not reached within {slots} slots (last p_on = {last_p_on:e})")]
    NoConvergence {
        slots: usize,
        last_p_on: f64,
        trace: Box<crate::pulse_train::TraceResult>,
    },

    #[error("age cap {cap} too small: {reason}")]
    AgeCap { cap: usize, reason: String },

    #[error(
        "efficiency is zero at threshold bias fraction {bias_fraction}; no finite photon number re-trips the wire"
    )]
    ZeroEfficiency { bias_fraction: f64 },

    #[error("oracle validation failed: {0}")]
    Validation(String),

    #[error("search failed: {0}")]
    Search(String),

    #[error("length mismatch: {left} vs {right} slots")]
    LengthMismatch { left: usize, right: usize },

    #[error("at {power_dbm} dBm: {source}")]
    AtPower {
        power_dbm: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain { what, value, expected }
    }

    pub(crate) fn config(field: impl Into<String>, value: impl ToString, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            value: value.to_string(),
            reason: reason.into(),
        }
    }

    /// Short stable identifier, used on the machine-readable CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Config { .. } => "config",
            Error::Format { .. } => "format",
            Error::WorkBudget { .. } => "work_budget",
            Error::NoConvergence { .. } => "no_convergence",
            Error::AgeCap { .. } => "age_cap",
            Error::ZeroEfficiency { .. } => "zero_efficiency",
            Error::Validation(_) => "validation",
            Error::Search(_) => "search",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::AtPower { source, .. } | Error::File { source, .. } => source.kind(),
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

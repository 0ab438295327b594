use thiserror::Error;

/// Errors produced by the simulator and the analytic solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: alice has {alice} bits, bob has {bob}")]
    LengthMismatch { alice: usize, bob: usize },

    #[error("reconciliation infeasible: estimated error rate {estimated} exceeds {bound}")]
    ReconciliationInfeasible { estimated: f64, bound: f64 },

    #[error("no secure key extractable (final length {final_length})")]
    NoSecureKey { final_length: i64 },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("estimation failed: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}

/// Checks `lo <= value <= hi` (and finiteness).
pub(crate) fn check_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(domain(what, value))
    }
}

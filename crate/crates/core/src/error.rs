// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha must lie in (0, 2], got {0}")]
    InvalidAlpha(f64),

    #[error("network size n must be finite and greater than 1, got {0}")]
    InvalidNetworkSize(f64),

    #[error("sigma must be finite and positive, got {0}")]
    InvalidSigma(f64),

    #[error("{what} = {value} is outside its domain {domain}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("trial abandoned after reaching the step cap of {0}")]
    StepCapExceeded(u64),

    #[error("walk crossing has no positive root (|p|^2 - r^2 = {0})")]
    CrossingGeometry(f64),

    #[error("empirical distribution has no samples")]
    EmptyBatch,

    #[error("{abandoned} of {trials} trials abandoned, above the 0.1% limit")]
    TooManyAbandoned { abandoned: u64, trials: u64 },

    #[error("exponent fit needs at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },

    #[error("statistic must be positive for a log-log fit, got {value} at n = {n}")]
    NonPositiveStatistic { n: f64, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn out_of_domain(what: &'static str, value: f64, domain: impl Into<String>) -> Error {
    Error::OutOfDomain {
        what,
        value,
        domain: domain.into(),
    }
}

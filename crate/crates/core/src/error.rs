use alloc::string::String;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Validation(String),
    #[error("overflow: |λ|e^Re(z) with Re(z) = {re} is not representable natively")]
    Overflow { re: f64 },
    #[error("numeric range exceeded at step {step}")]
    Range { step: usize },
    #[error("w = 0 has no preimage under λe^z")]
    ZeroPreimage,
    #[error("orbit argument lost precision at step {step}")]
    UntrustedArgument { step: usize },
    #[error("address is empty")]
    EmptyAddress,
    #[error("address has no entry at index {index}")]
    MissingEntry { index: usize },
    #[error("ray at t = {t} did not converge (depth gap {gap:e})")]
    NonConvergence { t: f64, gap: f64 },
    #[error("supergrowth check failed at index {index}")]
    Supergrowth { index: usize },
    #[error("point {re}+{im}i is outside the induced-map domain")]
    OutOfDomain { re: f64, im: f64 },
    #[error("column {column} is not covered by any level band")]
    Uncovered { column: i64 },
    #[error("scales must be positive and strictly decreasing")]
    DegenerateScales,
    #[error("cover enumeration exceeded {limit} cells")]
    BranchExplosion { limit: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: &str) -> Error {
    Error::Validation(String::from(msg))
}

use thiserror::Error;

/// Errors raised by constructors and operations of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range for {what} (allowed 0..={max})")]
    Range {
        what: &'static str,
        index: i64,
        max: i64,
    },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid gamma weights: {0}")]
    InvalidGamma(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate structure: {0}")]
    Degenerate(String),

    #[error("integration failed at t = {t}: non-finite field value")]
    Integration { t: f64 },

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid trajectory table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}

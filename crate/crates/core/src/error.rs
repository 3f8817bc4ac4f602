//! Error type shared by every module.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular evaluation at s = {s} ({context})")]
    Singularity { s: Complex64, context: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("root finding did not converge (last iterate {last})")]
    RootFinding { last: Complex64 },
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(s: Complex64, what: &str) -> Result<()> {
    if s.re.is_finite() && s.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what}: non-finite argument {s}")))
    }
}

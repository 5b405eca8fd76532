use thiserror::Error;

/// Everything that can go wrong in this crate.
///
/// Variants are grouped into three categories that the command-line tool maps
/// to exit codes: bad input (2), numerical failure (3) and non-convergence (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("numeric range: {0}")]
    NumericRange(String),
    #[error("truncation did not converge: {0}")]
    Truncation(String),
    #[error("series did not converge: {reason} (partial sums {partial_sums:?})")]
    NonConvergence {
        reason: String,
        partial_sums: Vec<f64>,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Machine-readable category used in CLI error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Unsupported(_) | Error::Io(_) => "config",
            Error::Pole(_) | Error::Quadrature(_) | Error::NumericRange(_) => "numeric",
            Error::Truncation(_) | Error::NonConvergence { .. } => "nonconvergence",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "numeric" => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

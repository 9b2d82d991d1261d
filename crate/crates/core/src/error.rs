use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Dense storage of a square operator of this dimension would exceed the cap.
    #[error("dense operator of dimension {dim} exceeds the memory cap of {cap_bytes} bytes")]
    MemoryCap { dim: usize, cap_bytes: u64 },

    #[error("iteration did not converge after {iterations} steps (estimate {estimate:.6e}, residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    /// `I + V R_0` is numerically singular: an embedded eigenvalue or resonance is possible here.
    #[error("near-singular Birman-Schwinger operator at lambda = {lambda_re}{lambda_im:+}i (condition {condition:.3e})")]
    NearSingular {
        lambda_re: f64,
        lambda_im: f64,
        condition: f64,
    },

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("dense factorization failed: {0}")]
    Factorization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::MemoryCap { .. }
                | Error::NonConvergence { .. }
                | Error::NearSingular { .. }
                | Error::NotHermitian(_)
                | Error::Factorization(_)
        )
    }
}

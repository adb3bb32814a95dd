use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid derivative order {0}; expected 1, 2 or 3")]
    InvalidOrder(u8),

    #[error("cycle length must be odd and at least 3, got {0}")]
    InvalidCycleLength(u32),

    #[error("no admissible pode size c in [{lo:e}, {hi:e}] (series seed {seed:e})")]
    NoRootInBracket { lo: f64, hi: f64, seed: f64 },

    #[error("assembled graphon leaves [0,1]: {0}")]
    OutOfDomain(String),

    #[error("model Hessian is not negative definite (h_aa={h_aa:e}, h_am={h_am:e}, h_mm={h_mm:e})")]
    NotNegativeDefinite { h_aa: f64, h_am: f64, h_mm: f64 },

    #[error("no convergence after {iterations} iterations (grad_norm={grad_norm:e})")]
    MaxIterExceeded { iterations: usize, grad_norm: f64 },

    #[error("iterate left the validity region: {0}")]
    RegionViolation(String),

    #[error("pode rounds to zero rows (c={c}, n={n})")]
    DegeneratePode { c: f64, n: usize },

    #[error("constraints not met after {outer} outer iterations (residual {residual:e} > {tol:e})")]
    ConstraintInfeasible { outer: usize, residual: f64, tol: f64 },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Solver-side failures, as opposed to bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NoRootInBracket { .. }
                | Error::NotNegativeDefinite { .. }
                | Error::MaxIterExceeded { .. }
                | Error::RegionViolation(_)
                | Error::ConstraintInfeasible { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs violate a documented precondition or invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The target power cannot be reached within the allowed enrollment.
    #[error("infeasible design: power {power_at_max:.6} at max_n = {max_n} does not exceed target {target_power}")]
    Infeasible {
        max_n: u64,
        power_at_max: f64,
        target_power: f64,
    },

    /// Inputs are well-formed but carry no usable information
    /// (zero variance, constant outcomes, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A linear system could not be solved even after ridge regularization.
    #[error("singular design matrix: {0}")]
    Singular(String),

    /// A cross-fitting fold has no rows from one of the arms.
    #[error("fold {fold} has no rows in arm {arm}; use fewer folds (currently {folds})")]
    EmptyFoldArm { fold: usize, arm: u8, folds: usize },

    /// Malformed external data (CSV / JSON).
    #[error("data error: {0}")]
    Data(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Prefixes the message of the string-carrying variants with `ctx`.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::InvalidInput(m) => Error::InvalidInput(format!("{ctx}: {m}")),
            Error::Degenerate(m) => Error::Degenerate(format!("{ctx}: {m}")),
            Error::Singular(m) => Error::Singular(format!("{ctx}: {m}")),
            Error::Data(m) => Error::Data(format!("{ctx}: {m}")),
            other => other,
        }
    }
}

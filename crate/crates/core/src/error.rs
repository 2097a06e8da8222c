use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Every variant belongs to one of three classes (see [`Error::class`]) which
/// the command-line front end maps onto process exit codes.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("enumeration budget exceeded: {needed} field elements requested, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },

    #[error("precision insufficient: {0}")]
    Precision(String),

    #[error("Weil bound violated: {0}")]
    WeilViolation(String),

    #[error("inconsistent point counts: {0}")]
    InconsistentCounts(String),

    #[error("internal invariant breached: {0}")]
    Invariant(String),
}

/// Coarse failure category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Resource,
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_) | Error::WeilViolation(_) | Error::InconsistentCounts(_) => {
                ErrorClass::Validation
            }
            Error::BudgetExceeded { .. } | Error::Precision(_) => ErrorClass::Resource,
            Error::Invariant(_) => ErrorClass::Internal,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

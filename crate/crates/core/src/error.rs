use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precision failure: {0}")]
    Precision(String),
    #[error("search budget exhausted after {tries} tries: {what}")]
    BudgetExhausted { what: String, tries: usize },
    #[error("multiplicity {mult} at slope {slope}: exact enumeration needs a multiplicity-free module, use sampled mode")]
    Multiplicity { slope: String, mult: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("not a perturbateur: {0}")]
    NotPerturbateur(String),
    #[error("no symplectic eigenbasis: {0}")]
    NoSymplecticEigenbasis(String),
    #[error("internal contradiction: {0}")]
    InternalContradiction(String),
    #[error("field incompatibility: {0}")]
    FieldIncompatibility(String),
    #[error("cocycle violation: {0}")]
    CocycleViolation(String),
    #[error("not a p-group: {0}")]
    NotPGroup(String),
    #[error("not prime: {0}")]
    NotPrime(u64),
}

impl Error {
    pub fn precision(msg: impl Into<String>) -> Self {
        Error::Precision(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Failures that a rerun at higher precision may cure.
    pub fn is_precision(&self) -> bool {
        matches!(self, Error::Precision(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

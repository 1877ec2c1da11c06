use thiserror::Error;

/// Errors raised by the library. Every variant maps to a stable code used in reports.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("unknown identifier: {0}")]
    UnknownIdentifier(String),
    #[error("base mismatch: {0}")]
    BaseMismatch(String),
    #[error("ambient mismatch: {0}")]
    AmbientMismatch(String),
    #[error("search space too large: {what} needs {estimate} > bound {bound}")]
    SearchSpaceTooLarge { what: String, estimate: String, bound: u64 },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("unsupported carrier: {0}")]
    UnsupportedCarrier(String),
    #[error("unknown quantifier: {0}")]
    UnknownQuantifier(String),
    #[error("unbound variable: {0}")]
    UnboundVariable(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("empty carrier: {0}")]
    EmptyCarrier(String),
    #[error("improper filter: {0}")]
    ImproperFilter(String),
    #[error("unsupported functor: {0}")]
    UnsupportedFunctor(String),
    #[error("functor does not preserve products: {0}")]
    FunctorNotProductPreserving(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("hypotheses not met: {0}")]
    HypothesesNotMet(String),
    #[error("not a sentence: {0}")]
    NotASentence(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedInput(_) => "MalformedInput",
            Error::UnknownIdentifier(_) => "UnknownIdentifier",
            Error::BaseMismatch(_) => "BaseMismatch",
            Error::AmbientMismatch(_) => "AmbientMismatch",
            Error::SearchSpaceTooLarge { .. } => "SearchSpaceTooLarge",
            Error::PreconditionFailed(_) => "PreconditionFailed",
            Error::UnsupportedCarrier(_) => "UnsupportedCarrier",
            Error::UnknownQuantifier(_) => "UnknownQuantifier",
            Error::UnboundVariable(_) => "UnboundVariable",
            Error::SignatureMismatch(_) => "SignatureMismatch",
            Error::EmptyCarrier(_) => "EmptyCarrier",
            Error::ImproperFilter(_) => "ImproperFilter",
            Error::UnsupportedFunctor(_) => "UnsupportedFunctor",
            Error::FunctorNotProductPreserving(_) => "FunctorNotProductPreserving",
            Error::ArityMismatch(_) => "ArityMismatch",
            Error::HypothesesNotMet(_) => "HypothesesNotMet",
            Error::NotASentence(_) => "NotASentence",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

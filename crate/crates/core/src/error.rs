use thiserror::Error;

/// Errors raised by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("metric axiom violated: {0}")]
    MetricAxiom(String),

    #[error(
        "triangle inequality violated for triple ({i}, {j}, {k}): \
         d({i},{k}) = {d_ik} > d({i},{j}) + d({j},{k}) = {d_ij} + {d_jk}"
    )]
    Triangle {
        i: usize,
        j: usize,
        k: usize,
        d_ij: f64,
        d_jk: f64,
        d_ik: f64,
    },

    #[error("resolution must be positive and finite, got {0}")]
    Resolution(f64),

    #[error("unknown point id {0}")]
    UnknownPoint(usize),

    #[error("subset is bound to a different space")]
    ForeignMask,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} is not contained in the field domain")]
    NotInDomain(String),

    #[error("derivation trace saturated at step {step} for epsilon = {epsilon}")]
    Saturated { epsilon: f64, step: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Precondition,
    Invariant,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Schema(_)
            | Error::MetricAxiom(_)
            | Error::Triangle { .. }
            | Error::Resolution(_)
            | Error::Json(_)
            | Error::Io(_) => ErrorClass::Validation,
            Error::Invariant(_) => ErrorClass::Invariant,
            Error::UnknownPoint(_)
            | Error::ForeignMask
            | Error::InvalidParameter(_)
            | Error::NotInDomain(_)
            | Error::Saturated { .. }
            | Error::Precondition(_) => ErrorClass::Precondition,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

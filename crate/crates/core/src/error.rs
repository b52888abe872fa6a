use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the model, solvers and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("atom frequency {omega_atom} lies outside the open band ({lower}, {upper})")]
    OutOfBand {
        omega_atom: f64,
        lower: f64,
        upper: f64,
    },

    #[error("singular parameter: {0}")]
    SingularParameter(String),

    #[error("energy {energy} is inside the band; the closed form needs |E - omega_c| > 2 xi")]
    InsideBand { energy: f64 },

    #[error("BIC condition not satisfied: {0}")]
    BicCondition(String),

    #[error("ambiguous classification: {0}")]
    Classification(String),

    #[error("bound-state model unavailable: missing {0}")]
    ModelUnavailable(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("internal error: {0}")]
    Internal(String),
}

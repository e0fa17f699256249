use thiserror::Error;

/// Errors raised while building models or running numerical solves.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Fock dimension {0}: every mode needs at least 2 levels")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("jump channel has negative rate {0}")]
    NegativeRate(f64),

    #[error("vector of length {0} is not the flattening of a square matrix")]
    NotSquare(usize),

    #[error("Zeno reduction undefined: {0}")]
    ZenoAssumption(String),

    #[error("odd cat state is undefined at zero amplitude (normalization diverges)")]
    DegenerateCat,

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("adjoint kernel has dimension {kernel} but the supplied basis has {basis} elements")]
    KernelMismatch { kernel: usize, basis: usize },

    #[error("time integration failed: {0}")]
    Integration(String),

    #[error("invalid phase-space slice: {0}")]
    InvalidSlice(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::mdi::BellState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: ||m - m†||_max = {defect:e}")]
    NotHermitian { defect: f64 },

    #[error("matrix is not unitary: ||u u† - I||_max = {defect:e}")]
    NotUnitary { defect: f64 },

    #[error("matrix is not a density matrix")]
    NotDensity,

    #[error("matrix entry is NaN or infinite")]
    NonFinite,

    #[error("rotation axis is not a unit vector (norm {norm})")]
    NonUnitAxis { norm: f64 },

    #[error("rotation angle must be finite and non-negative, got {0}")]
    InvalidAngle(f64),

    #[error(
        "(V_{k}† ⊗ V_{k}†)|{state}> does not match any Bell state (best overlap {overlap:.3e})"
    )]
    LookupConstruction {
        k: usize,
        state: BellState,
        overlap: f64,
    },

    #[error("Born probability {0:e} is negative beyond tolerance")]
    NegativeProbability(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

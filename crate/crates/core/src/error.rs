use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {actual}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("matrix is not Hermitian (max |m - m^dagger| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("not a density operator: {0}")]
    InvalidState(String),

    #[error("not an effect: {0}")]
    InvalidEffect(String),

    #[error("weights invalid: {0}")]
    InvalidWeights(String),

    #[error("states are not orthogonal (Tr[x1 x2] = {overlap:e})")]
    NotOrthogonal { overlap: f64 },

    #[error("state is not pure (second eigenvalue {second_eigenvalue:e})")]
    NotPure { second_eigenvalue: f64 },

    #[error("operator is not unitary (||S S^dagger - I||_F = {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),

    #[error("selection probability {probability:e} is below the degeneracy guard")]
    DegenerateSelection { probability: f64 },

    #[error("operator does not factor over channels (residual {residual:e})")]
    NotProduct { residual: f64 },

    #[error("premise violated: {0}")]
    Premise(String),

    #[error("trial {trial}: channels identified different indices {indices:?}")]
    InconsistentIdentification { trial: usize, indices: Vec<usize> },
}

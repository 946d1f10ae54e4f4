use alloc::string::String;

use thiserror::Error;

/// Errors raised by the numeric core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("matrix is not Hermitian (max |m - m^dagger| = {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("trace is not 1 (got {trace})")]
    NotUnitTrace { trace: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("invalid subsystem selection: {0}")]
    InvalidPartition(&'static str),
    #[error("Kraus operators are not trace preserving (residual {residual:e})")]
    NotTracePreserving { residual: f64 },
    #[error("parameter {name} out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("probabilities must be non-negative and sum to 1 (sum {sum})")]
    InvalidProbabilities { sum: f64 },
    #[error("duplicate label {0}")]
    DuplicateLabel(usize),
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("input {index} does not match its declared structure (residual {residual:e})")]
    InputStructure { index: usize, residual: f64 },
    #[error("channel is not certified entanglement breaking (min partial-transpose eigenvalue {min_eigenvalue:e}, dims {d_in}x{d_out})")]
    NotEntanglementBreaking {
        min_eigenvalue: f64,
        d_in: usize,
        d_out: usize,
    },
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("missing correction for message {message}, outcome {outcome}")]
    MissingCorrection { message: usize, outcome: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..=10")]
    QubitCount(usize),

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("qubit index list {0:?} contains duplicates")]
    DuplicateQubits(Vec<usize>),

    #[error("parameter vector has length {got}, expected {expected}")]
    ParamLength { got: usize, expected: usize },

    #[error("non-finite parameter at index {0}")]
    NonFiniteParam(usize),

    #[error("input sequence is empty")]
    EmptySequence,

    #[error("forecast horizon must be at least 1")]
    ZeroHorizon,

    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("relative RMSE undefined: reference series has zero RMS")]
    ZeroReference,

    #[error("train split of {len} points is too short for horizon {horizon}")]
    SplitTooShort { len: usize, horizon: usize },

    #[error("non-finite gradient component at index {0}")]
    NonFiniteGradient(usize),

    #[error("series has {got} points but at least {required} are required")]
    SeriesTooShort { got: usize, required: usize },

    #[error("train split is constant; min-max normalization undefined")]
    ConstantTrainSplit,

    #[error("invalid Mackey-Glass parameters: {0}")]
    MackeyGlassParams(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV column {0:?} not found in header")]
    MissingColumn(String),

    #[error("non-numeric value {value:?} in column {column:?} at data row {row}")]
    BadCell {
        value: String,
        column: String,
        row: usize,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no successful runs for method {0}")]
    NoSuccessfulRuns(String),
}

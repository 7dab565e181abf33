//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gate policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("CNOT offset {delta} at qubit {qubit}, layer {layer} has no atom assignment (offsets above 4 are unmappable)")]
    UnmappableOffset {
        qubit: usize,
        layer: usize,
        delta: usize,
    },

    #[error("molecule is missing branch annotations: {0}")]
    MissingAnnotation(String),

    #[error("atom {atom} has degree {degree} exceeding valence {valence}")]
    ValenceExceeded {
        atom: usize,
        degree: usize,
        valence: usize,
    },

    #[error("molecular graph is disconnected")]
    Disconnected,

    #[error("atoms {i} and {j} are closer than the {floor} layout-unit floor (distance {dist})")]
    CoincidentAtoms {
        i: usize,
        j: usize,
        dist: f64,
        floor: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("row {row}, column {column}: {message}")]
    CsvCell {
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

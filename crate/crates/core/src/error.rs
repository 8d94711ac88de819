use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("elements belong to different fields (m={left_m}, poly={left_poly:#x}) vs (m={right_m}, poly={right_poly:#x})")]
    FieldMismatch {
        left_m: u32,
        left_poly: u64,
        right_m: u32,
        right_poly: u64,
    },

    #[error("matrix is not Hermitian (max |A - A^H| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not symmetric: entry ({row},{col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("column index {index} out of range for {cols} columns")]
    ColumnOutOfRange { index: usize, cols: usize },

    #[error("operation requires a Delsarte-Goethals matrix, got {family}")]
    WrongFamily { family: String },

    #[error("problem too large for exhaustive evaluation: {reason}")]
    TooLarge { reason: String },

    #[error("sensitivity probe exceeded declared bound on coordinate {coordinate}: {observed:e} > {declared:e}")]
    SensitivityExceeded {
        coordinate: usize,
        observed: f64,
        declared: f64,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max |m - m^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error(
        "MUB construction not available for d = {d}, n = {n}; supported families: \
         any d with n <= 2, d = 2 with n <= 3, odd prime d with n <= d + 1"
    )]
    UnsupportedMub { d: usize, n: usize },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("advantage ratio undefined: classical bound is {w_classical:e} (must be > 0)")]
    XiDomain { w_classical: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

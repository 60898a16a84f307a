use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("unknown subsystem `{0}`")]
    UnknownSubsystem(String),

    #[error("unknown basis label `{label}` for subsystem `{subsystem}`")]
    UnknownLabel { subsystem: String, label: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operand spaces do not match")]
    SpaceMismatch,

    #[error("subsystem sets overlap or do not cover the target space: {0}")]
    BadPartition(String),

    #[error("dense materialization refused for dimension {0} (limit {limit})", limit = crate::DENSE_LIMIT)]
    TooLargeForDense(usize),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("vectors are not orthogonal (|overlap| = {0})")]
    NotOrthogonal(f64),

    #[error("vectors are linearly dependent or zero")]
    LinearlyDependent,

    #[error("operator is not Hermitian (deviation {0})")]
    NotHermitian(f64),

    #[error("invalid projector family: {0}")]
    InvalidFamily(String),

    #[error("unknown label `{0}` in projector family")]
    UnknownFamilyLabel(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("time {time} lies outside [{start}, {end}]")]
    TimeOutOfRange { time: f64, start: f64, end: f64 },

    #[error("invalid history: {0}")]
    InvalidHistory(String),

    #[error("histories are not comparable: {0}")]
    MismatchedHistories(String),

    #[error("integration step must be positive and finite (got {0})")]
    InvalidStep(f64),

    #[error("non-finite transition rate at t = {0}")]
    NonFiniteRate(f64),

    #[error("kernel row {row} sums to {sum}, not 1")]
    KernelNotStochastic { row: usize, sum: f64 },

    #[error("kernel entry ({row}, {col}) is negative: {value}")]
    NegativeKernelEntry { row: usize, col: usize, value: f64 },

    #[error("step too large: max exit rate x step = {0} exceeds 0.1")]
    StepTooLarge(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = core::result::Result<T, Error>;

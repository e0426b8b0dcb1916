use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid k-set: {0}")]
    InvalidKSet(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("jet order {requested} exceeds supported maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },

    #[error("singular metric at point {point:?} (|det| = {det:e})")]
    SingularMetric { point: Vec<f64>, det: f64 },

    #[error("degenerate plane ({a},{b}): |denominator| = {denom:e}")]
    DegeneratePlane { a: usize, b: usize, denom: f64 },

    #[error("frame ({x},{y}) is not orthonormal on the horizontal distribution (residual {residual:e})")]
    NotOrthonormal { x: usize, y: usize, residual: f64 },

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("Newton iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("branch violation: {0}")]
    Branch(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("field is not serializable: {0}")]
    NotSerializable(String),
}

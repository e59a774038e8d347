use alloc::string::String;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid structure constants: {0}")]
    InvalidStructure(String),
    #[error("dilation factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field does not live on the expected grid")]
    GridMismatch,
    #[error("gauge ball is empty (center {center:?}, radius {radius})")]
    EmptyBall { center: alloc::vec::Vec<f64>, radius: f64 },
    #[error("ball leaves the valid stencil region (radius {radius})")]
    BallOutsideValidRegion { radius: f64 },
    #[error("empty family or region: {0}")]
    Empty(String),
    #[error("polynomial is not symmetric in its quadratic part")]
    AsymmetricQuadratic,
    #[error("antisymmetric part is not representable (residual {residual:e})")]
    NotRepresentable { residual: f64 },
    #[error("linear solve did not converge: {iterations} iterations, relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("domain is not connected under the stencil graph ({components} components)")]
    DisconnectedDomain { components: usize },
    #[error("domain node {0} has a stencil leaving the grid")]
    InvalidDomainNode(usize),
    #[error("unsupported group for this operation: {0}")]
    UnsupportedGroup(String),
    #[error("unknown name: {0}")]
    UnknownName(String),
    #[error("resampling point outside the source grid")]
    ResampleOutOfRange,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

pub type Result<T> = core::result::Result<T, Error>;

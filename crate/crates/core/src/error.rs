use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid tagging: {0}")]
    InvalidTagging(String),
    #[error("space {0} has no free degrees of freedom")]
    EmptySpace(&'static str),
    #[error("measure(Γ3) = 0: no contact boundary")]
    NoContactBoundary,
    #[error("material assumption violated: {name} ({detail})")]
    Assumption { name: &'static str, detail: String },
    #[error("matrix is singular at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("matrix is not positive definite at pivot {pivot}")]
    NotPositiveDefinite { pivot: usize },
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("fixed point exceeded {max_outer} outer iterations; increment norms {history:?}")]
    OuterLimit { max_outer: usize, history: Vec<f64> },
    #[error("solvability gate violated: L_r = {lipschitz} >= Z0 = {z0}")]
    GateViolated { lipschitz: f64, z0: f64 },
    #[error("size {size} exceeds dense limit {limit}")]
    SizeLimit { size: usize, limit: usize },
    #[error("search box too small: minimizer on the boundary along axis {axis}")]
    BoxTooSmall { axis: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("step {step}: {source}")]
    Step { step: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::Dimension { expected, got })
        }
    }
}

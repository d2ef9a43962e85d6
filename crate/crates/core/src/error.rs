use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A standing hypothesis of a formula is violated (e.g. `δ > d`, `δ < 2p`).
    #[error("domain error: {quantity} requires {hypothesis} (got {detail})")]
    Domain {
        quantity: &'static str,
        hypothesis: &'static str,
        detail: String,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid metric family: {0}")]
    InvalidMetric(String),

    #[error("metric is not symmetric positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },

    #[error("operator assembly requires a diagonal metric; g[{i}][{j}] = {value} at {point:?}")]
    NonDiagonalMetric {
        i: usize,
        j: usize,
        value: f64,
        point: Vec<f64>,
    },

    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("potential must be nonnegative; node {node} has value {value:e}")]
    NegativePotential { node: usize, value: f64 },

    #[error("dense eigensolver failed on a {size}x{size} block")]
    Eigensolver { size: usize },

    #[error("iterative eigensolver did not converge after {iterations} iterations (worst residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("quadrature did not reach tolerance {target:e} (estimated error {estimate:e})")]
    Quadrature { target: f64, estimate: f64 },

    #[error("eigenvectors are required but the decomposition holds eigenvalues only")]
    MissingEigenvectors,
}

pub(crate) fn domain(quantity: &'static str, hypothesis: &'static str, detail: String) -> Error {
    Error::Domain {
        quantity,
        hypothesis,
        detail,
    }
}

//! Error types shared across the toolkit.

use thiserror::Error;

/// Everything that can go wrong while evaluating fields, measures,
/// quadratures or scenario reports.
#[derive(Debug, Error)]
pub enum Error {
    /// A point lies outside the domain a field or measure is defined on.
    #[error("point outside domain: {0}")]
    Domain(String),

    /// Derivative requested within the kink-exclusion band of a non-smooth field.
    #[error("derivative evaluated within {dist:.3e} of a kink at coordinate {coord}")]
    KinkProximity { coord: usize, dist: f64 },

    /// Symmetric factorization failed: the matrix is not positive definite
    /// to working precision.
    #[error("singular or non-positive-definite Hessian (pivot {pivot:.3e} at index {index})")]
    SingularHessian { index: usize, pivot: f64 },

    /// Measure parameters produce a non-normalizable density.
    #[error("non-integrable density: {0}")]
    NonIntegrable(String),

    /// Parameter outside the range an operation supports.
    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    /// Guard failed for an inequality scenario.
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// Adaptive quadrature hit its subdivision cap before meeting tolerance.
    /// Carries the best estimate obtained so far.
    #[error("quadrature did not converge (best {value:.6e} +/- {error_bound:.3e} after {node_count} nodes)")]
    NonConvergent {
        value: f64,
        error_bound: f64,
        node_count: usize,
    },

    /// Dimension exceeds what the selected integration strategy supports.
    #[error("unsupported dimension {dim} for strategy {strategy}")]
    UnsupportedDimension { dim: usize, strategy: &'static str },

    /// Rejection sampler acceptance rate collapsed.
    #[error("sampler acceptance rate {rate:.3e} below threshold")]
    SamplerInefficiency { rate: f64 },

    /// Optimized-form denominator R(phi^{r-1}) indistinguishable from zero.
    #[error("degenerate denominator: |R| = {value:.3e} within error {err:.3e}")]
    DegenerateDenominator { value: f64, err: f64 },

    /// Parameter sweep or evolution left the valid range of a formula.
    #[error("range error: {0}")]
    Range(String),

    /// Grid solve failed beyond the expected constant kernel.
    #[error("discretization error: {0}")]
    Discretization(String),

    /// Eigenvalue iteration failed to converge.
    #[error("spectral solver did not converge after {iterations} iterations")]
    Spectral { iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

/// Unified result type for the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across geometry, assembly, and solves.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar or structural parameter violated its documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The fundamental solution was evaluated at its pole.
    #[error("fundamental solution evaluated at its pole")]
    PoleEvaluation,

    /// A zero-bracketing scan found no sign change.
    #[error("bracketing failed for zero #{index} of J_{order} near {guess}")]
    BracketFailure { order: u32, index: u32, guess: f64 },

    /// The grid resolves too little of the domain to be meaningful.
    #[error("domain too coarse: {interior} interior nodes (need at least {minimum})")]
    DomainTooCoarse { interior: usize, minimum: usize },

    /// An operator was applied to a vector of the wrong length.
    #[error("dimension mismatch: operator dimension {expected}, vector length {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An iterative solve ran out of iterations above tolerance.
    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    SolverDidNotConverge { iterations: usize, residual: f64 },

    /// The pole of a Dirichlet problem sits within two grid spacings of the
    /// boundary, where the interpolated Robin value is unreliable.
    #[error("pole ({x}, {y}, {t}) is within two grid spacings of the boundary")]
    PoleNearBoundary { x: f64, y: f64, t: f64 },

    /// The interpolated regular part came out non-positive, so no harmonic
    /// radius can be extracted; refine the grid.
    #[error("interpolated Robin value {value:.3e} is not positive; grid too coarse at the pole")]
    NonPositiveRobinValue { value: f64 },

    /// A level-set threshold selects no interior nodes.
    #[error("level set at threshold {threshold:.3e} is empty (field maximum {maximum:.3e})")]
    EmptyLevelSet { threshold: f64, maximum: f64 },

    /// Surface extraction produced no triangles.
    #[error("surface extraction produced no triangles")]
    EmptySurface,

    /// The membership gradient degenerated at a surface sample even after
    /// widening the difference stencil.
    #[error("degenerate surface gradient at sample ({x}, {y}, {t})")]
    DegenerateSurfaceGradient { x: f64, y: f64, t: f64 },

    /// A transplanted profile was built for a different harmonic radius than
    /// the Green data it is applied to.
    #[error("profile radius {profile:.6} does not match harmonic radius {radius:.6} within {tolerance:.0e}")]
    ProfileRadiusMismatch { profile: f64, radius: f64, tolerance: f64 },

    /// A radial profile does not vanish at the ball boundary.
    #[error("radial profile does not vanish at the boundary: u(R) = {value:.3e}")]
    NonVanishingBoundaryValue { value: f64 },
}

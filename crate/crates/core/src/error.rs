//! Error type shared across the crate.

use thiserror::Error;

/// Errors reported by geometry construction, energy-form assembly, and the
/// projection solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate box: axis {axis} has zero or negative extent")]
    DegenerateBox { axis: usize },

    #[error("grid resolution must be >= 1 on every axis (axis {axis} is {given})")]
    BadResolution { axis: usize, given: usize },

    #[error("{what} requires dimension {required}, got {given}")]
    UnsupportedDimension {
        what: &'static str,
        required: &'static str,
        given: usize,
    },

    #[error("point set too close to coincident: points {i} and {j} are at distance {distance:e} (limit {limit:e})")]
    PointsTooClose {
        i: usize,
        j: usize,
        distance: f64,
        limit: f64,
    },

    #[error("empty point set: a discrete space needs at least one point")]
    EmptySpace,

    #[error("cell weight {index} is not strictly positive: {value}")]
    NonPositiveCellWeight { index: usize, value: f64 },

    #[error("non-finite entry at index {index}")]
    NonFiniteEntry { index: usize },

    #[error("sphere sampling needs at least 4 points, got {given}")]
    SphereTooCoarse { given: usize },

    #[error("sphere radius must be positive, got {given}")]
    BadRadius { given: f64 },

    #[error("riesz exponent alpha must satisfy 0 < alpha < n, got alpha = {alpha}, n = {dim}")]
    BadRieszExponent { alpha: f64, dim: usize },

    #[error("green-ball kernel: point at distance {distance} from the center is not strictly inside the ball of radius {radius}")]
    OutsideGreenBall { distance: f64, radius: f64 },

    #[error("dense assembly rejected: {n} points exceeds the {limit}-point limit")]
    TooLarge { n: usize, limit: usize },

    #[error("energy principle violated: gram matrix is not strictly positive definite (pivot {pivot:e} at index {index})")]
    EnergyPrincipleViolated { index: usize, pivot: f64 },

    #[error("objects live on different spaces ({left} vs {right})")]
    SpaceMismatch { left: String, right: String },

    #[error("length mismatch: expected {expected} entries, got {given}")]
    LengthMismatch { expected: usize, given: usize },

    #[error("mask index {index} is out of bounds for a space of {n} points")]
    MaskOutOfBounds { index: usize, n: usize },

    #[error("solver did not converge within {iterations} iterations: stationarity {stationarity:e}, feasibility {feasibility:e}, complementarity {complementarity:e} (tolerance {tolerance:e}, scale {scale:e})")]
    NonConvergence {
        iterations: usize,
        stationarity: f64,
        feasibility: f64,
        complementarity: f64,
        tolerance: f64,
        scale: f64,
        /// Best iterate reached, for diagnosis.
        best_iterate: Vec<f64>,
    },

    #[error("test family is empty")]
    EmptyFamily,

    #[error("exhaustion masks are not nested: stage {stage} is not a subset of stage {next}")]
    NotNested { stage: usize, next: usize },

    #[error("empty sequence: need at least one measure")]
    EmptySequence,

    #[error("source point at distance {distance} must lie strictly outside the sphere of radius {radius}")]
    SourceInsideSphere { distance: f64, radius: f64 },

    #[error("shape mismatch between oracle and main value")]
    ShapeMismatch,

    #[error("invalid solve options: {reason}")]
    BadOptions { reason: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("document version {given} is not supported (expected {expected})")]
    BadVersion { given: u32, expected: u32 },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the laboratory's numerical and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no grid cell falls inside the shape at spacing h = {h}")]
    EmptyDomain { h: f64 },

    #[error("interior cells are not 4-connected ({components} components)")]
    DisconnectedDomain { components: usize },

    #[error("dimension n = {0} is not supported by the grid backend (only n = 2)")]
    UnsupportedDimension(usize),

    #[error("invalid exponent p = {0}; require p > 1")]
    InvalidExponent(f64),

    #[error("invalid fractional order alpha = {alpha}; require 0 <= alpha < {n}")]
    InvalidOrder { alpha: f64, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("Newton iteration did not converge: {iterations} iterations, relative residual {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("ball is not compactly contained in the domain")]
    BallNotInterior,

    #[error("degenerate data: denominator vanishes")]
    DegenerateData,

    #[error("compact set is not contained in the reference set")]
    InvalidNesting,

    #[error("all super-level sets are empty over the lambda grid")]
    EmptyRange,

    #[error("corpus too small: {0} solves (need at least 10)")]
    CorpusTooSmall(usize),

    #[error("covering hypothesis violated: W fills more than epsilon of the ball at x = ({x:.6}, {y:.6}), r = {r:.6}")]
    HypothesisViolated { x: f64, y: f64, r: f64 },

    #[error("epsilon = {eps} outside (0, eps0 = {eps0:e})")]
    EpsilonOutOfRange { eps: f64, eps0: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("linear system is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::NotPositiveDefinite { .. } | Error::DegenerateData | Error::EmptyRange
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

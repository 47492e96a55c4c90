use thiserror::Error;

/// Errors produced by the core numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported complex dimension {0} (only n = 1 and n = 2 are implemented)")]
    UnsupportedDimension(usize),

    #[error("resolution {0} is invalid: need a power of two >= 8")]
    InvalidResolution(usize),

    #[error("field contains a non-finite sample")]
    NonFiniteField,

    #[error("wave frequency {k:?} is at or above the Nyquist limit {limit}")]
    AliasedFrequency { k: Vec<i64>, limit: i64 },

    #[error("grids do not match: ({0}, {1}) vs ({2}, {3})")]
    GridMismatch(usize, usize, usize, usize),

    #[error("matrix dimensions do not match: n = {0} vs n = {1}")]
    DimensionMismatch(usize, usize),

    #[error("mean-zero potential required: |mean| = {0:.3e}")]
    NonZeroMean(f64),

    #[error("metric positivity lost: min eigenvalue {min_eig:.6e} <= floor {floor:.3e}")]
    Positivity { min_eig: f64, floor: f64 },

    #[error("Monge-Ampère density is singular: min determinant {0:.6e}")]
    SingularMetric(f64),

    #[error("negative time {0} rejected")]
    NegativeTime(f64),

    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),

    #[error("solvability mismatch: mean density {mean_density:.12e} vs class volume {class_volume:.12e}")]
    Solvability { mean_density: f64, class_volume: f64 },

    #[error("Newton iteration did not converge within {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("Newton iterate lost metric positivity even after damping to {step:.3e}")]
    PositivityLoss { step: f64 },

    #[error("series contains a non-positive value {0:.3e} inside the fit window")]
    NonPositiveSeries(f64),

    #[error("need at least {needed} points in the fit window, found {found}")]
    InsufficientWindow { needed: usize, found: usize },

    #[error("mask excludes too much of the grid: unmasked fraction {0:.3}")]
    MaskCoversEverything(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

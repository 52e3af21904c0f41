//! Simulation of the alpha-CIR process: a square-root (CIR-type) diffusion
//! driven by Brownian noise plus a compensated, spectrally positive
//! alpha-stable jump process,
//!
//! ```text
//! dX_t = (a - k X_t) dt + sigma1 sqrt(X_t) dW_t + sigma2 |X_{t-}|^{1/alpha} dZ_t
//! ```
//!
//! The crate provides
//!
//! * [`model`] — parameter sets, grid descriptions, driver laws and every
//!   validity condition the scheme relies on;
//! * [`drivers`] — reproducible per-path noise generation (Brownian,
//!   alpha-stable, compensated Poisson) on a fine grid with exact
//!   coarse-grid aggregation, so that several grid resolutions can be
//!   driven by one underlying noise path;
//! * [`scheme`] — the positivity-preserving implicit Euler–Maruyama step.
//!   Each step solves a quadratic in `sqrt(x_next)` whose closed-form root
//!   keeps the state non-negative no matter how violent the jump increment
//!   is, and records whether the absolute-value repair of the discriminant
//!   activated;
//! * [`experiments`] — the Monte Carlo harness: coupled-grid strong-error
//!   studies with log-log slope fits, plus probes for the discriminant
//!   negativity frequency, terminal moments, and the jump driver's Laplace
//!   transform.
//!
//! Everything downstream of a seed is deterministic: each path owns a pair
//! of counter-based RNG streams keyed by its index, and reductions happen
//! in fixed path order, so results are bit-identical regardless of how many
//! worker threads are used.

pub mod drivers;
pub mod experiments;
pub mod model;
pub mod scheme;

use model::ValidationReport;

/// Unified error type for everything that can go wrong in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violated a construction invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A joint parameter/grid validation failed; the report lists each
    /// condition with its outcome.
    #[error("validation failed:\n{0}")]
    Validation(ValidationReport),

    /// The implicit step requires `1 + k * dt > 0`.
    #[error("grid condition violated: 1 + k*dt = {value} is not positive")]
    GridCondition { value: f64 },

    /// A step input (state or increment) was NaN or infinite.
    #[error("non-finite step input: {0}")]
    NonFiniteInput(&'static str),

    /// Coarse grids must divide the fine grid for exact aggregation.
    #[error("{coarse_n} does not divide the fine grid size {fine_n}")]
    NotADivisor { coarse_n: usize, fine_n: usize },

    /// Increment arrays must match the grid they are consumed on.
    #[error("increment array has length {got}, grid needs {need}")]
    LengthMismatch { got: usize, need: usize },

    /// An operation was handed a driver kind it does not support, or a
    /// driver inconsistent with the model parameters.
    #[error("unsupported driver: {0}")]
    DriverMismatch(String),

    /// Too many paths overflowed for the averages to mean anything.
    #[error("exploded-path fraction {fraction:.3e} exceeds abort threshold {threshold:.3e}")]
    ExplosionAbort { fraction: f64, threshold: f64 },

    /// Slope fitting needs at least two points with strictly positive values.
    #[error("slope fit rejected: {0}")]
    DegenerateFit(String),

    /// Underlying I/O failure (panel dump/restore).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A panel file did not match the expected binary layout.
    #[error("malformed panel data: {0}")]
    PanelFormat(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

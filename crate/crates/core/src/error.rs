//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter set violates a documented invariant (ranges, k*L = 1, ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A caller-supplied argument is outside the operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Initial data referenced a mode outside the lattice window.
    #[error("initial mode {index} lies outside the window [{n_min}, {n_max}]")]
    ModeOutsideWindow { index: i64, n_min: i64, n_max: i64 },

    /// Integration produced a non-finite state or could not make progress.
    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    /// Window management hit the configured hard limit.
    #[error("window grew to {modes} modes, exceeding the configured limit of {limit}")]
    WindowLimitExceeded { modes: usize, limit: usize },

    /// Path enumeration would produce more paths than the configured cap.
    #[error("path enumeration exceeds the cap of {cap} paths; reduce the depth or the support")]
    PathCapExceeded { cap: usize },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed to converge: worst subinterval [{a}, {b}] has error {err:.3e}")]
    QuadratureNonConvergence { a: f64, b: f64, err: f64 },

    /// A closed-form bound was requested outside its domain of validity.
    #[error("domain error: {0}")]
    Domain(String),

    /// A weighted norm overflowed even in log-space.
    #[error("overflow: {0}")]
    Overflow(String),

    /// Configuration file problem (unknown key, missing key, inconsistency).
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A length scale is too small for the grid to resolve.
    #[error("grid resolution: {0}")]
    Resolution(String),

    /// A state, spinor or amplitude vector violates a structural invariant.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// An operator fails its algebraic precondition (e.g. non-unitary).
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Amplitudes became non-finite or the norm left its tolerance band.
    #[error("numerical blow-up at step {step} (t = {time}): {detail}")]
    NumericalBlowup {
        step: u64,
        time: f64,
        detail: String,
    },

    /// A collapse center landed where the state has no support.
    #[error("degenerate collapse: {0}")]
    DegenerateCollapse(String),

    /// A measurement scenario ended before outcomes were distinguishable.
    #[error("inconclusive measurement: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error types shared across the estimation library.

use thiserror::Error;

/// Errors produced by estimation routines.
#[derive(Error, Debug)]
pub enum Error {
    /// Inputs violate a documented precondition (dimension mismatch, empty
    /// data, out-of-range tuning value, non-finite number, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The iterative solver exhausted its sweep budget without meeting the
    /// convergence tolerance.
    #[error("solver did not converge after {sweeps} sweeps (last max coefficient change {last_change:e})")]
    Diverged { sweeps: usize, last_change: f64 },

    /// The treatment indicator is constant, so a propensity model cannot be
    /// identified.
    #[error("degenerate treatment: {0}")]
    DegenerateTreatment(String),

    /// No observation follows the requested decision rule (after censoring
    /// adjustment), so rule-specific quantities are undefined.
    #[error("empty regimen: no observations follow the rule {0}")]
    EmptyRegimen(String),

    /// All kernel weights vanish at the requested evaluation point, so the
    /// local average is undefined.
    #[error("zero kernel mass at the evaluation point (h = {h}); widen the bandwidth or move the point")]
    ZeroKernelMass { h: f64 },

    /// Rule optimization was asked to choose from an empty or fully failed
    /// candidate set.
    #[error("no feasible rule index: {0}")]
    NoFeasibleTheta(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal conditions surfaced alongside a result instead of failing the
/// pipeline; callers decide whether to log, record, or escalate them.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A weighted average had no positively weighted terms (e.g. no
    /// uncensored rule-follower); the associated value defaults to zero.
    EmptyRegimen(String),
    /// No candidate met the selection threshold; the fallback choice was
    /// returned instead.
    ThresholdNotMet {
        /// The threshold that had to be met.
        target: f64,
        /// The best (smallest) criterion value actually achieved.
        achieved: f64,
    },
    /// Candidate estimates showed no usable trend; the most stable
    /// candidate was returned.
    FlatTrend,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::EmptyRegimen(msg) => write!(f, "empty regimen: {msg}"),
            Warning::ThresholdNotMet { target, achieved } => write!(
                f,
                "no candidate met the threshold {target:e} (best achieved {achieved:e}); \
                 falling back to the largest candidate"
            ),
            Warning::FlatTrend => {
                write!(f, "estimates show no trend; selecting the most stable candidate")
            }
        }
    }
}

impl Error {
    /// Shorthand for an [`Error::InvalidInput`] with a formatted message.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

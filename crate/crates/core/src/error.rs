//! Error type shared by all solver layers.

use thiserror::Error;

/// Errors surfaced by model validation, integration, root finding and the
/// policy search.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid state (x={x}, y={y}): {reason}")]
    InvalidState { x: f64, y: f64, reason: String },

    #[error("policy does not cover [{needed_from}, {needed_to}]: {reason}")]
    PolicyGap {
        needed_from: f64,
        needed_to: f64,
        reason: String,
    },

    #[error("non-finite state at t={t}; check tolerances and max_step")]
    NonFiniteState { t: f64 },

    #[error("step size underflow at t={t}; right-hand side too stiff for the configured tolerances")]
    StepSizeUnderflow { t: f64 },

    #[error("event never occurs before t_max or y_stop ({what})")]
    EventNotReached { what: String },

    #[error("no sign change on [{lo}, {hi}]; root bracket invalid")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("cross-check failed: {what} (|delta| = {delta:.3e}, tol = {tol:.1e})")]
    CrossCheckFailed { what: String, delta: f64, tol: f64 },

    #[error("phase function invalid: {0}")]
    InvalidPhase(String),

    #[error("search space too large: {candidates} candidates exceed cap {cap}")]
    SearchTooLarge { candidates: u128, cap: u128 },

    #[error("no feasible candidate found (check horizon T and interval count N)")]
    NoFeasibleCandidate,
}

pub type Result<T> = std::result::Result<T, CoreError>;

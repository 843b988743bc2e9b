use alloc::string::String;

use crate::state::GameState;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A `(state, next state)` pair that no valid transition can produce.
    #[error("inadmissible transition {from} -> {to}: {reason}")]
    InadmissibleTransition {
        from: GameState,
        to: GameState,
        reason: &'static str,
    },

    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Malformed user-supplied values (coefficients, covariates, configs).
    #[error("invalid input: {0}")]
    Input(String),

    /// A single play record failed validation.
    #[error("invalid play record: {0}")]
    Record(String),

    /// Kernel assembly could not produce a row for some cell.
    #[error("assembly failed for {cell}: {reason}")]
    Assembly { cell: String, reason: String },

    /// A kernel row or structure check failed.
    #[error("malformed kernel: {0}")]
    Kernel(String),

    /// The kernel has not been certified with a halting report.
    #[error("kernel has no halting certificate; run validate_halting first")]
    NotCertified,

    /// The halting check found a policy that can keep the inning alive forever.
    #[error("kernel refused: worst-case non-absorption rho = {rho} over m = {horizon} steps")]
    KernelRefused { rho: f64, horizon: usize },

    /// An iterative method hit its iteration cap.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    /// An invariant that should hold by construction was observed to fail.
    #[error("internal invariant breach: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

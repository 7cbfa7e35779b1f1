use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quantity `{name}` is not conserved: largest coefficient of its derivative along the field is {residual:e}")]
    NotConserved { name: String, residual: f64 },

    #[error("alpha undefined: a3 must be nonzero")]
    AlphaUndefined,

    #[error("no inertia realization: a1 + a2 + a3 = {0} must vanish")]
    NoInertiaRealization(f64),

    #[error("not an equilibrium: |X(x0)|_inf = {0:e}")]
    NotAnEquilibrium(f64),

    #[error("constraint gradients dependent: rank {rank} < {expected}")]
    DependentConstraints { rank: usize, expected: usize },

    #[error("eigen-solver did not converge")]
    EigenNoConvergence,

    #[error("step underflow at t = {t}: step {h:e} below minimum")]
    StepUnderflow { t: f64, h: f64 },

    #[error("max steps exceeded ({0})")]
    MaxStepsExceeded(usize),

    #[error("non-finite state at t = {0}")]
    NonFiniteState(f64),

    #[error("eigenplane degenerate: integral Hessian is not positive on any sampled in-plane direction")]
    EigenplaneDegenerate,

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("period collapsed: T = {period} left [0.1, 10] x T0 with T0 = {reference}")]
    PeriodCollapsed { period: f64, reference: f64 },

    #[error("left level set: constraint residual stagnated at {0:e}")]
    LeftLevelSet(f64),

    #[error("no epsilon converged")]
    EmptyFamily,
}

pub type Result<T> = std::result::Result<T, Error>;

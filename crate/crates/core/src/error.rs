use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("resolvent sI - T is numerically singular at s = {re} + {im}i (condition {cond:e})")]
    SingularResolvent { re: f64, im: f64, cond: f64 },

    #[error("roots of psi(s) = q are not distinct (min pairwise distance {distance:e})")]
    RepeatedRoots { distance: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("no sign change found while bracketing {0}")]
    NoBracket(String),

    #[error("tolerance not met for {what}: residual {residual:e}")]
    ToleranceNotMet { what: String, residual: f64 },

    #[error("evaluation point {x} is within 1e-6 of the kink at {kink}")]
    KinkTooClose { x: f64, kink: f64 },

    #[error("invalid configuration: {0}")]
    ConfigError(String),
}

pub type Result<T> = std::result::Result<T, Error>;

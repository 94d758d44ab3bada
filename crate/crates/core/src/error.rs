use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("atom {index}: mass must be positive, got {mass}")]
    NonPositiveMass { index: usize, mass: f64 },

    #[error("total mass {total} differs from 1")]
    MassNotNormalized { total: f64 },

    #[error("positions must be strictly increasing (index {index})")]
    UnsortedPositions { index: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid step function: {0}")]
    InvalidStepFunction(&'static str),

    #[error("invalid piecewise-linear function: {0}")]
    InvalidPiecewiseLinear(&'static str),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("atom {index} at position {position} lies outside the domain")]
    OutsideDomain { index: usize, position: f64 },

    #[error("initial support spans more than one domain component")]
    SupportNotInComponent,

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("time {t} lies beyond the simulated horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("operation requires the full line as domain")]
    RequiresFreeLine,

    #[error("event budget of {0} exhausted without reaching equilibrium")]
    EventBudgetExhausted(usize),

    #[error("flow has not reached equilibrium within the simulated horizon")]
    NotAtEquilibrium,

    #[error("flow diverges: clusters keep moving (no asymptotic profile)")]
    Divergent,

    #[error("decay fit: {0}")]
    DecayFit(String),

    #[error("bombardment spec: {0}")]
    Bombardment(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

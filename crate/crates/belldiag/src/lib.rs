//! Estimation of Bell diagonal two-qubit states.
//!
//! The crate covers the full pipeline: state parametrizations and geometry
//! ([`states`]), projective measurement strategies and outcome sampling
//! ([`measurements`]), direct inversion / maximum likelihood / Bayesian mean
//! estimators over a discretized simplex ([`estimators`]), closed-form risk
//! expressions and bounds ([`analytics`]), Helstrom discrimination of Bell
//! diagonal pairs ([`distinguish`]), and a seeded Monte Carlo harness with
//! report emission ([`harness`]).

pub mod analytics;
pub mod distinguish;
pub mod estimators;
pub mod harness;
pub mod measurements;
pub mod states;

use thiserror::Error;

/// Errors surfaced by the estimation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("theta does not sum to 1 (sum = {0})")]
    ThetaNotNormalized(f64),
    #[error("theta component out of range: {0}")]
    ThetaOutOfRange(f64),
    #[error("correlation vector lies outside the physical tetrahedron")]
    UnphysicalState,
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(&'static str),
    #[error("invalid Pauli channel: {0}")]
    InvalidChannel(&'static str),
    #[error("basis vectors are not orthonormal")]
    NotOrthonormal,
    #[error("shot count {shots} is not divisible by {divisor} as required by the {strategy} plan")]
    Divisibility {
        strategy: &'static str,
        shots: u64,
        divisor: u64,
    },
    #[error("record is empty (N = 0) but the estimator requires data")]
    EmptyRecord,
    #[error("state grid is empty")]
    EmptyGrid,
    #[error("prior concentration parameters must be positive")]
    InvalidPrior,
    #[error("posterior has no mass on the grid")]
    ZeroPosteriorMass,
    #[error("no closed form for {strategy} + {estimator}")]
    NoClosedForm {
        strategy: &'static str,
        estimator: &'static str,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("loss inputs must be probability vectors (found negative component {0})")]
    NegativeComponent(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

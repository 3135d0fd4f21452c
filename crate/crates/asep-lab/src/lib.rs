//! Numerical laboratory for blocks of particles in the asymmetric simple
//! exclusion process started from step-Bernoulli initial data.
//!
//! The crate computes the probability that the m-th particle from the left
//! sits at site `x` and heads a block of `L` consecutive particles at time
//! `t`, by three independent routes:
//!
//! * [`exact`] — nested contour integrals of Fredholm determinants
//!   (spectrally accurate, small `m` and `L`),
//! * [`jrep`] — an alternate kernel representation used as a cross-check,
//! * [`simulate`] — event-driven Monte Carlo of the particle system,
//!
//! together with the KPZ-regime limit laws ([`limits`]: Tracy–Widom `F2`,
//! the rank-one perturbed determinant `F1²`, and the Gaussian case) and a
//! verification suite for the exactly solvable contour-integral identities
//! the evaluators rest on ([`identities`]).

pub mod contours;
pub mod exact;
pub mod fredholm;
pub mod identities;
pub mod jrep;
pub mod limits;
pub mod model;
pub mod simulate;

pub(crate) mod dd;
pub(crate) mod linalg;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("p must lie in (0, 1/2): got {0}")]
    InvalidP(f64),
    #[error("gamma = q - p must be positive (p = {0} gives gamma <= 0)")]
    GammaNotPositive(f64),
    #[error("rho must lie in (0, 1]: got {0}")]
    InvalidRho(f64),
    #[error("invalid block query: {0}")]
    InvalidQuery(String),
    #[error("evaluation at coincident arguments (pole of U)")]
    PoleAtCoincidence,
    #[error("quadrature produced a non-finite value in {0}")]
    QuadratureFailure(&'static str),
    #[error("grid node within {tol:e} of an integrand pole ({what})")]
    GridHitsPole { what: &'static str, tol: f64 },
    #[error("lambda contour passes within tolerance of a pole tau^-{0}")]
    PoleOnContour(usize),
    #[error("convergence gap {gap:e} above tolerance {tol:e} ({what})")]
    ConvergenceNotReached { what: &'static str, gap: f64, tol: f64 },
    #[error("argument modulus {0} outside the convergence annulus (tau, 1/tau)")]
    OutsideConvergenceAnnulus(f64),
    #[error("mu within tolerance of a pole tau^k of f")]
    PoleInMu,
    #[error("evaluation too close to a pole of phi_infinity")]
    PoleProximity,
    #[error("theta within two radii of a Gamma circle")]
    ThetaTooClose,
    #[error("argument {0} outside the supported range")]
    RangeExceeded(f64),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("tracked particle too close to the initialized window edge")]
    WindowExhausted,
    #[error("only {0} conditioning events observed (need at least 100)")]
    InsufficientConditioningEvents(u64),
    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),
    #[error("linear algebra backend error: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Dissipative mechanical squeezing in a periodically modulated optomechanical
//! cavity: classical mean-field dynamics under a three-tone drive, linearized
//! Gaussian covariance dynamics with and without the rotating-wave
//! approximation, exact spectral steady states, adiabatic closed forms, and
//! sideband-ratio optimization.
//!
//! All rates and frequencies are expressed in units of the mechanical
//! frequency `omega_m`, which is fixed to 1.

pub mod adiabatic;
pub mod analysis;
pub mod cli;
pub mod config;
pub mod covariance;
pub mod meanfield;
pub mod model;
pub mod optimize;
pub mod output;
pub mod par;
pub mod spectral;

pub use model::{CouplingSidebands, CovarianceMatrix, DriveSidebands, Stability, SystemParams};

/// Mechanical angular frequency, the unit of every other rate.
pub const OMEGA_M: f64 = 1.0;

/// Errors produced by the library and the batch front end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The config file could not be parsed or is missing required keys.
    #[error("config error: {0}")]
    Config(String),

    /// A numeric computation failed (divergence, pole on the integration
    /// path, loss of positive definiteness, cross-check disagreement).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The drift admits no steady state (marginal or unstable couplings).
    #[error("no steady state: {0}")]
    NoSteadyState(String),

    /// Two internal routes to the same quantity disagree; indicates either a
    /// bug or an input in a regime where the reduced criteria break down.
    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the batch front end: 2 for configuration and
    /// input problems, 3 for numeric or stability failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) | Error::Io(_) => 2,
            Error::Numeric(_) | Error::NoSteadyState(_) | Error::Internal(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

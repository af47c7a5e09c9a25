//! Heralded polarization Bell pairs from an atomic ensemble.
//!
//! * [`levels`]: Clebsch–Gordan coefficients and Zeeman transition
//!   amplitudes.
//! * [`collective`]: exact collective-state evolution through the heralded
//!   write and read pulses, Zeeman storage and Bell-fidelity extraction.
//! * [`stats`]: Poisson / binomial photon-counting model, event-class
//!   enumeration, pair rate and the λ trade-off solver.
//! * [`sampler`]: Monte Carlo trial simulator checked against [`stats`].
//! * [`cli`]: the `heralded-bell` subcommands.

pub mod cli;
pub mod collective;
pub mod levels;
pub mod sampler;
pub mod stats;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Levels(#[from] levels::LevelError),
    #[error(transparent)]
    State(#[from] collective::StateError),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
    #[error(transparent)]
    Sampler(#[from] sampler::SamplerError),
    #[error(transparent)]
    Config(#[from] cli::ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl Error {
    /// Short machine-readable category for the CLI's error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Levels(_) => "levels",
            Error::State(_) => "state",
            Error::Stats(_) => "stats",
            Error::Sampler(_) => "sampler",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}

//! Adaptive-partition Q-learning over continuous state-action spaces.
//!
//! This crate implements two model-free episodic trainers over an
//! adaptively discretized unit square:
//!
//! - [`spaql`]: a single shared partition for all time steps, exploring
//!   with upper-confidence bonuses plus Boltzmann sampling under a cyclic
//!   temperature schedule, and always keeping the best agent found.
//! - [`aql`]: the baseline that keeps one partition per time step and
//!   explores through the confidence bonus alone.
//!
//! [`env`] provides the two benchmark problems (oil discovery and
//! ambulance routing) and the reference policies, and [`harness`] drives
//! multi-seed experiments: scaling-value sweeps, cross-seed aggregation
//! with confidence intervals, Welch t-tests, and CSV/JSON exports.

pub mod aql;
pub mod env;
pub mod harness;
pub mod partition;
pub mod spaql;
pub(crate) mod util;

use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("heuristic policies are defined only for the ambulance environment")]
    HeuristicNeedsAmbulance,
    #[error("Welch t-test needs two samples of at least two values with nonzero variance in at least one sample")]
    DegenerateTTest,
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

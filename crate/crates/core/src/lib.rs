//! Finite-temperature Ising observables from SU(2) coherent-state
//! phase-space sampling.
//!
//! The Boltzmann operator is expanded over phase-averaged kernels
//! `∏_i exp(R_i σᶻ_i)` whose site variables `R_i` are driven by Gaussian
//! link noises on every ordered pair of coupled spins. Two samplers are
//! provided: [`direct`] draws the noises in closed form and reweights by
//! the kernel trace, [`langevin`] relaxes them in fictitious time towards
//! a stationary density that already contains the weight. Both are checked
//! against the oracles in [`exact`].
//!
//! Trajectory ensembles run on a rayon pool when the `parallel` feature is
//! enabled (the default) and sequentially otherwise; see [`ensemble`].

// Negated comparisons are how the validators reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod direct;
pub mod ensemble;
pub mod exact;
pub mod langevin;
pub mod model;
pub mod observable;
pub mod oracle;
pub mod output;
pub mod stats;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Exact(#[from] exact::ExactError),
    #[error(transparent)]
    Algebra(#[from] algebra::AlgebraError),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("trajectory {trajectory} diverged at tau = {tau} (beta = {beta})")]
    Divergence { trajectory: usize, tau: f64, beta: f64 },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Coarse failure class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Capacity,
    Divergence,
    Other,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Parse => 2,
            ErrorKind::Capacity => 3,
            ErrorKind::Divergence => 4,
            ErrorKind::Other => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Parse => "parse",
            ErrorKind::Capacity => "capacity",
            ErrorKind::Divergence => "divergence",
            ErrorKind::Other => "error",
        }
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Model(model::ModelError::Io { .. }) | Error::Io { .. } => ErrorKind::Other,
            Error::Model(_) | Error::Config(_) => ErrorKind::Parse,
            Error::Exact(exact::ExactError::Capacity { .. }) | Error::Algebra(algebra::AlgebraError::Capacity { .. }) => {
                ErrorKind::Capacity
            }
            Error::Divergence { .. } => ErrorKind::Divergence,
            _ => ErrorKind::Other,
        }
    }
}

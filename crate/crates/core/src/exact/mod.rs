//! Exact reference solutions used as oracles for the samplers.

mod brute;
mod onsager;
mod transfer;

use std::collections::BTreeMap;

use thiserror::Error;

pub use brute::{brute_force, brute_force_pairs, BruteForce, DEFAULT_MAX_BRUTE_SITES};
pub use onsager::{complete_elliptic_k, onsager_nn_correlation, CRITICAL_BETA};
pub use transfer::{transfer_log_z, transfer_matrix, transfer_nn_correlation, TransferMatrix, DEFAULT_MAX_WIDTH};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("{what}: {requested} exceeds the cap of {cap}")]
    Capacity { what: &'static str, requested: usize, cap: usize },
    #[error("{0}")]
    Domain(String),
}

/// Exact thermodynamics of a model at one inverse temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub log_z: f64,
    /// `⟨σ_i⟩` per site.
    pub magnetization: Vec<f64>,
    /// `⟨σ_i σ_j⟩` keyed by `(i, j)` with `i < j`.
    pub correlations: BTreeMap<(usize, usize), f64>,
    /// Unweighted mean of `⟨σ_i σ_j⟩` over the stored edges of the model.
    pub mean_edge_correlation: Option<f64>,
}

impl ExactResult {
    pub fn correlation(&self, a: usize, b: usize) -> Option<f64> {
        self.correlations.get(&(a.min(b), a.max(b))).copied()
    }
}

/// `Z₂ = e^{β(2h+J)} + 2e^{−βJ} + e^{β(J−2h)}` for one bond `J` between two
/// sites in a uniform field `h`.
pub fn two_site_closed_form(coupling: f64, field: f64, beta: f64) -> ExactResult {
    let aligned_up = beta * (2.0 * field + coupling);
    let aligned_down = beta * (coupling - 2.0 * field);
    let opposed = 2f64.ln() - beta * coupling;
    let shift = aligned_up.max(aligned_down).max(opposed);
    let (up, down, anti) = (
        (aligned_up - shift).exp(),
        (aligned_down - shift).exp(),
        (opposed - shift).exp(),
    );
    let z = up + down + anti;
    let m = (up - down) / z;
    let mut correlations = BTreeMap::new();
    let c = (up + down - anti) / z;
    correlations.insert((0, 1), c);
    ExactResult {
        log_z: shift + z.ln(),
        magnetization: vec![m, m],
        correlations,
        mean_edge_correlation: Some(c),
    }
}

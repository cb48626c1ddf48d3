//! Spin observables expressed through the c-number magnetizations
//! `m_i = tanh R_i`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::CouplingGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    /// `⟨σ_i⟩`.
    Magnetization(usize),
    /// `⟨σ_i σ_j⟩`.
    Correlation(usize, usize),
    /// Mean of `⟨σ_i σ_j⟩` over the stored edges.
    NearestNeighbour,
}

impl Observable {
    /// Value of the observable's c-number equivalent for one sample.
    pub fn evaluate(&self, graph: &CouplingGraph, m: &[f64]) -> f64 {
        match *self {
            Observable::Magnetization(i) => m[i],
            Observable::Correlation(i, j) => m[i] * m[j],
            Observable::NearestNeighbour => {
                let edges = graph.edges();
                edges.iter().map(|e| m[e.i] * m[e.j]).sum::<f64>() / edges.len() as f64
            }
        }
    }

    pub fn validate(&self, graph: &CouplingGraph) -> Result<(), String> {
        let m = graph.sites();
        match *self {
            Observable::Magnetization(i) if i >= m => Err(format!("site {i} out of range for {m} sites")),
            Observable::Correlation(i, j) if i >= m || j >= m => {
                Err(format!("pair ({i}, {j}) out of range for {m} sites"))
            }
            Observable::NearestNeighbour if graph.edges().is_empty() => {
                Err("nearest-neighbour correlation of a model with no edges".into())
            }
            _ => Ok(()),
        }
    }

    /// Column value for the `observable` field of a result record.
    pub fn name(&self) -> &'static str {
        match self {
            Observable::Magnetization(_) => "magnetization",
            Observable::Correlation(..) => "correlation",
            Observable::NearestNeighbour => "nn_correlation",
        }
    }

    /// Column value for the `pair` field: `i`, `i-j` or `nn`.
    pub fn pair_label(&self) -> String {
        match *self {
            Observable::Magnetization(i) => i.to_string(),
            Observable::Correlation(i, j) => format!("{i}-{j}"),
            Observable::NearestNeighbour => "nn".into(),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Observable::Magnetization(i) => write!(f, "m{i}"),
            Observable::Correlation(i, j) => write!(f, "{i},{j}"),
            Observable::NearestNeighbour => write!(f, "nn"),
        }
    }
}

impl FromStr for Observable {
    type Err = String;

    /// Accepts `nn`, `i,j` (or `i-j`) and `m<i>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "nn" {
            return Ok(Observable::NearestNeighbour);
        }
        if let Some(site) = s.strip_prefix('m') {
            return site
                .parse()
                .map(Observable::Magnetization)
                .map_err(|_| format!("invalid magnetization site in `{s}`"));
        }
        let mut parts = s.split([',', '-']);
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("expected `nn`, `i,j` or `m<i>`, got `{s}`"));
        };
        let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("invalid site index `{x}` in `{s}`"));
        let (a, b) = (parse(a)?, parse(b)?);
        if a == b {
            return Err(format!("pair `{s}` repeats a site"));
        }
        Ok(Observable::Correlation(a.min(b), a.max(b)))
    }
}

/// Parses a `;`-separated list of observables.
pub fn parse_observables(s: &str) -> Result<Vec<Observable>, String> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

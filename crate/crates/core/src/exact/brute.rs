use std::collections::BTreeMap;

use super::{ExactError, ExactResult};
use crate::ensemble::{blocks, Executor};
use crate::model::CouplingGraph;

pub const DEFAULT_MAX_BRUTE_SITES: usize = 24;

const BLOCK: usize = 1 << 12;

/// Exhaustive enumeration of all `2^M` configurations.
#[derive(Debug, Clone, Copy)]
pub struct BruteForce {
    pub max_sites: usize,
    pub executor: Executor,
}

impl Default for BruteForce {
    fn default() -> Self {
        Self {
            max_sites: DEFAULT_MAX_BRUTE_SITES,
            executor: Executor::default(),
        }
    }
}

/// Boltzmann sums over a block of configurations, relative to `shift`.
#[derive(Debug, Clone)]
struct Partial {
    shift: f64,
    weight: f64,
    spin: Vec<f64>,
    pair: Vec<f64>,
}

impl Partial {
    fn rescaled(mut self, shift: f64) -> Self {
        let f = (self.shift - shift).exp();
        self.weight *= f;
        self.spin.iter_mut().for_each(|x| *x *= f);
        self.pair.iter_mut().for_each(|x| *x *= f);
        self.shift = shift;
        self
    }

    fn merge(self, other: Partial) -> Partial {
        let shift = self.shift.max(other.shift);
        let a = self.rescaled(shift);
        let b = other.rescaled(shift);
        Partial {
            shift,
            weight: a.weight + b.weight,
            spin: a.spin.iter().zip(&b.spin).map(|(x, y)| x + y).collect(),
            pair: a.pair.iter().zip(&b.pair).map(|(x, y)| x + y).collect(),
        }
    }
}

#[inline]
fn spin(config: u32, site: usize) -> f64 {
    if config >> site & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

impl BruteForce {
    /// Exact `log Z`, magnetizations and the correlations of `pairs`.
    pub fn solve(&self, graph: &CouplingGraph, beta: f64, pairs: &[(usize, usize)]) -> Result<ExactResult, ExactError> {
        let m = graph.sites();
        if m > self.max_sites || m > 31 {
            return Err(ExactError::Capacity {
                what: "brute-force site count",
                requested: m,
                cap: self.max_sites.min(31),
            });
        }
        if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a >= m || b >= m) {
            return Err(ExactError::Domain(format!("pair ({a}, {b}) out of range for {m} sites")));
        }
        let total = 1usize << m;
        let ranges: Vec<_> = blocks(total, BLOCK).collect();
        let partials = self.executor.map_indexed(ranges.len(), |b| {
            let range = ranges[b].clone();
            let log_w: Vec<f64> = range
                .clone()
                .map(|c| {
                    let c = c as u32;
                    let field: f64 = graph.fields().iter().enumerate().map(|(i, h)| h * spin(c, i)).sum();
                    let bonds: f64 = graph
                        .edges()
                        .iter()
                        .map(|e| e.coupling * spin(c, e.i) * spin(c, e.j))
                        .sum();
                    beta * (field + bonds)
                })
                .collect();
            let shift = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut p = Partial {
                shift,
                weight: 0.0,
                spin: vec![0.0; m],
                pair: vec![0.0; pairs.len()],
            };
            for (c, lw) in range.zip(&log_w) {
                let c = c as u32;
                let w = (lw - shift).exp();
                p.weight += w;
                for (i, s) in p.spin.iter_mut().enumerate() {
                    *s += w * spin(c, i);
                }
                for (k, &(a, b)) in pairs.iter().enumerate() {
                    p.pair[k] += w * spin(c, a) * spin(c, b);
                }
            }
            p
        });
        let sum = partials.into_iter().reduce(Partial::merge).expect("at least one block");

        let magnetization = sum.spin.iter().map(|s| s / sum.weight).collect();
        let mut correlations = BTreeMap::new();
        for (k, &(a, b)) in pairs.iter().enumerate() {
            correlations.insert((a.min(b), a.max(b)), sum.pair[k] / sum.weight);
        }
        let edges = graph.edges();
        let mean_edge_correlation = if edges.is_empty() {
            None
        } else {
            let found: Option<Vec<f64>> = edges.iter().map(|e| correlations.get(&(e.i, e.j)).copied()).collect();
            found.map(|c| c.iter().sum::<f64>() / c.len() as f64)
        };
        Ok(ExactResult {
            log_z: sum.shift + sum.weight.ln(),
            magnetization,
            correlations,
            mean_edge_correlation,
        })
    }
}

/// Brute force with the correlations of every edge.
pub fn brute_force(graph: &CouplingGraph, beta: f64) -> Result<ExactResult, ExactError> {
    let pairs: Vec<_> = graph.edges().iter().map(|e| (e.i, e.j)).collect();
    BruteForce::default().solve(graph, beta, &pairs)
}

/// Brute force with every edge plus the requested pairs.
pub fn brute_force_pairs(graph: &CouplingGraph, beta: f64, pairs: &[(usize, usize)]) -> Result<ExactResult, ExactError> {
    let mut all: Vec<_> = graph.edges().iter().map(|e| (e.i, e.j)).collect();
    for &(a, b) in pairs {
        let key = (a.min(b), a.max(b));
        if !all.contains(&key) {
            all.push(key);
        }
    }
    BruteForce::default().solve(graph, beta, &all)
}

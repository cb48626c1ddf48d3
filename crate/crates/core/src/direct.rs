//! Closed-form weighted sampler.
//!
//! At inverse temperature `β` every ordered link noise is an independent
//! Gaussian `W ~ N(0, βJ/2)`. With `R_i = βh_i + Σ_j (W_ij + W_ji)` and
//! weight `Λ = ∏_i 2cosh R_i · e^{−βΣJ}`, `Z = ⟨Λ⟩` and
//! `⟨σ_i σ_j⟩ = ⟨tanh R_i tanh R_j Λ⟩/⟨Λ⟩`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::log_two_cosh;
use crate::ensemble::{blocks, trajectory_rng, Executor, StreamPurpose};
use crate::model::CouplingGraph;
use crate::observable::Observable;
use crate::stats::{Accumulator, Estimate, LogMeanAccumulator, StatsError, WeightedRatios};
use crate::Error;

/// Samples per accumulation block. Blocks are merged in index order, so
/// the result does not depend on how blocks are spread over workers.
const BLOCK: usize = 4096;

/// Ordered link noises: slots `2e` and `2e + 1` hold `W_ij` and `W_ji` for
/// stored edge `e = (i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkNoiseState {
    pub w: Vec<f64>,
    pub beta: f64,
}

impl LinkNoiseState {
    pub fn zeros(graph: &CouplingGraph, beta: f64) -> Self {
        Self { w: vec![0.0; 2 * graph.edges().len()], beta }
    }

    /// Independent `N(0, βJ/2)` draws for every ordered link.
    pub fn sample<R: Rng + ?Sized>(graph: &CouplingGraph, beta: f64, rng: &mut R) -> Self {
        let mut w = Vec::with_capacity(2 * graph.edges().len());
        for e in graph.edges() {
            let sd = (0.5 * beta * e.coupling).sqrt();
            for _ in 0..2 {
                let x: f64 = rng.sample(StandardNormal);
                w.push(sd * x);
            }
        }
        Self { w, beta }
    }

    /// `R_i = βh_i + Σ_{e ∋ i} (W_fwd + W_bwd)`.
    pub fn site_variables(&self, graph: &CouplingGraph) -> Vec<f64> {
        site_variables(graph, self.beta, &self.w)
    }
}

pub(crate) fn site_variables(graph: &CouplingGraph, beta: f64, w: &[f64]) -> Vec<f64> {
    let mut r = Vec::with_capacity(graph.sites());
    site_variables_into(graph, beta, w, &mut r);
    r
}

pub(crate) fn site_variables_into(graph: &CouplingGraph, beta: f64, w: &[f64], r: &mut Vec<f64>) {
    r.clear();
    r.extend(graph.fields().iter().map(|h| beta * h));
    for (e, edge) in graph.edges().iter().enumerate() {
        let plus = w[2 * e] + w[2 * e + 1];
        r[edge.i] += plus;
        r[edge.j] += plus;
    }
}

/// One draw of the direct method.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub r: Vec<f64>,
    /// `Σ_i ln(2cosh R_i) − βMJ̄`.
    pub log_weight: f64,
}

/// Draws the link noises at `β` and returns the site variables and weight.
pub fn sample_direct<R: Rng + ?Sized>(graph: &CouplingGraph, beta: f64, rng: &mut R) -> WeightedSample {
    let noise = LinkNoiseState::sample(graph, beta, rng);
    let r = noise.site_variables(graph);
    let log_weight = r.iter().map(|&x| log_two_cosh(x)).sum::<f64>() - beta * graph.total_coupling();
    WeightedSample { r, log_weight }
}

/// Ensemble settings shared by the direct-method estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectConfig {
    pub trajectories: usize,
    pub seed: u64,
    pub executor: Executor,
}

impl DirectConfig {
    pub fn new(trajectories: usize, seed: u64) -> Self {
        Self { trajectories, seed, executor: Executor::default() }
    }

    fn check(&self, min: usize) -> Result<(), Error> {
        if self.trajectories < min {
            return Err(Error::Config(format!("need at least {min} trajectories, got {}", self.trajectories)));
        }
        Ok(())
    }
}

fn check_beta(beta: f64) -> Result<(), Error> {
    if beta < 0.0 || !beta.is_finite() {
        return Err(Error::Config(format!("inverse temperature {beta} must be finite and non-negative")));
    }
    Ok(())
}

/// Runs `visit` over every sample of the ensemble, block by block, and
/// merges the per-block accumulators in order.
fn fold_samples<A, F, M>(graph: &CouplingGraph, beta: f64, config: &DirectConfig, init: A, visit: F, merge: M) -> Result<A, Error>
where
    A: Clone + Send + Sync,
    F: Fn(&mut A, &WeightedSample) -> Result<(), StatsError> + Sync + Send,
    M: Fn(&A, &A) -> A,
{
    let ranges: Vec<_> = blocks(config.trajectories, BLOCK).collect();
    let parts = config.executor.try_map_indexed(ranges.len(), |b| {
        let mut acc = init.clone();
        for t in ranges[b].clone() {
            let mut rng = trajectory_rng(config.seed, StreamPurpose::DirectLinkNoise, t as u64);
            let sample = sample_direct(graph, beta, &mut rng);
            visit(&mut acc, &sample)?;
        }
        Ok::<A, StatsError>(acc)
    })?;
    Ok(parts.iter().fold(init, |a, b| merge(&a, b)))
}

/// `log Z` estimated as the log of the mean weight, with its delta-method
/// standard error.
pub fn estimate_partition(graph: &CouplingGraph, beta: f64, config: &DirectConfig) -> Result<Estimate, Error> {
    check_beta(beta)?;
    config.check(2)?;
    let acc = fold_samples(
        graph,
        beta,
        config,
        LogMeanAccumulator::new(),
        |acc, s| acc.push_log(s.log_weight),
        LogMeanAccumulator::merge,
    )?;
    Ok(acc.estimate())
}

/// Weighted-ratio estimates `⟨f Λ⟩/⟨Λ⟩` of each observable.
pub fn estimate_observables_weighted(
    graph: &CouplingGraph,
    beta: f64,
    config: &DirectConfig,
    observables: &[Observable],
) -> Result<Vec<Estimate>, Error> {
    check_beta(beta)?;
    config.check(2)?;
    for o in observables {
        o.validate(graph).map_err(Error::Config)?;
    }
    let acc = fold_samples(
        graph,
        beta,
        config,
        WeightedRatios::new(observables.len()),
        |acc, s| {
            let m: Vec<f64> = s.r.iter().map(|x| x.tanh()).collect();
            let values: Vec<f64> = observables.iter().map(|o| o.evaluate(graph, &m)).collect();
            acc.push(s.log_weight, &values)
        },
        WeightedRatios::merge,
    )?;
    Ok(acc.estimates()?)
}

/// Spread of the log weights at one inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionPoint {
    pub beta: f64,
    /// Sample variance of `ln Λ`.
    pub log_weight_variance: f64,
    /// `Var(Λ)/⟨Λ⟩²`, which sets the relative error of `Z` per sample.
    pub relative_weight_variance: f64,
    pub samples: u64,
}

/// `Var(ln Λ)` for each `β`, showing how the weights spread as the
/// temperature drops.
pub fn weight_dispersion_report(
    graph: &CouplingGraph,
    betas: &[f64],
    config: &DirectConfig,
) -> Result<Vec<DispersionPoint>, Error> {
    config.check(100)?;
    betas
        .iter()
        .map(|&beta| {
            check_beta(beta)?;
            let (logs, weights) = fold_samples(
                graph,
                beta,
                config,
                (Accumulator::new(), LogMeanAccumulator::new()),
                |(logs, weights), s| {
                    logs.push(s.log_weight)?;
                    weights.push_log(s.log_weight)
                },
                |a, b| (a.0.merge(&b.0), a.1.merge(&b.1)),
            )?;
            Ok(DispersionPoint {
                beta,
                log_weight_variance: logs.variance(),
                relative_weight_variance: weights.relative_variance(),
                samples: logs.count(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{brute_force, two_site_closed_form};
    use crate::model::build_rectangular_lattice;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_site(j: f64, h: f64) -> CouplingGraph {
        CouplingGraph::new(2, &[(0, 1, j)], vec![h, h]).unwrap()
    }

    #[test]
    fn infinite_temperature_is_deterministic() {
        let g = build_rectangular_lattice(3, 2, 1.0, 0.4, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_direct(&g, 0.0, &mut rng);
        assert!(s.r.iter().all(|&r| r == 0.0));
        assert_relative_eq!(s.log_weight, 6.0 * 2f64.ln(), max_relative = 1e-15);

        let cfg = DirectConfig::new(1000, 3);
        let z = estimate_partition(&g, 0.0, &cfg).unwrap();
        assert_relative_eq!(z.value, 6.0 * 2f64.ln(), max_relative = 1e-15);
        assert_eq!(z.stderr, 0.0);
        let c = estimate_observables_weighted(&g, 0.0, &cfg, &[Observable::Correlation(0, 1)]).unwrap();
        assert_eq!(c[0].value, 0.0);
        assert_eq!(c[0].stderr, 0.0);
    }

    #[test]
    fn two_site_variables_are_equal() {
        let g = two_site(1.0, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let s = sample_direct(&g, 1.3, &mut rng);
            assert_eq!(s.r[0], s.r[1]);
        }
    }

    #[test]
    fn two_site_variance_of_r() {
        let g = two_site(1.0, 0.0);
        let beta = 0.8;
        let mut acc = Accumulator::new();
        let mut sq = Accumulator::new();
        for t in 0..100_000u64 {
            let mut rng = trajectory_rng(4, StreamPurpose::Synthetic, t);
            let s = sample_direct(&g, beta, &mut rng);
            acc.push(s.r[0]).unwrap();
            sq.push(s.r[0] * s.r[0]).unwrap();
        }
        // E[R²] = βJ; compare the second moment with its own stderr.
        let m2 = sq.estimate();
        assert!(m2.within(beta, 3.0), "{m2:?}");
        assert!(acc.estimate().within(0.0, 3.0));
    }

    #[test]
    fn exponential_moments_of_r() {
        // R = βh + W⁺ with Var W⁺ = βJ, so ⟨e^{±2R}⟩ = e^{±2βh + 2βJ}.
        let (j, h, beta) = (1.0, 0.2, 0.5);
        let g = two_site(j, h);
        let mut plus = Accumulator::new();
        let mut minus = Accumulator::new();
        for t in 0..200_000u64 {
            let mut rng = trajectory_rng(8, StreamPurpose::Synthetic, t);
            let s = sample_direct(&g, beta, &mut rng);
            plus.push((2.0 * s.r[0]).exp()).unwrap();
            minus.push((-2.0 * s.r[0]).exp()).unwrap();
        }
        assert!(plus.estimate().within((2.0 * beta * h + 2.0 * beta * j).exp(), 3.0), "{:?}", plus.estimate());
        assert!(minus.estimate().within((-2.0 * beta * h + 2.0 * beta * j).exp(), 3.0), "{:?}", minus.estimate());
    }

    #[test]
    fn two_site_partition_and_correlation() {
        let g = two_site(1.0, 0.0);
        let cfg = DirectConfig::new(200_000, 21);
        let exact = two_site_closed_form(1.0, 0.0, 1.0);
        let z = estimate_partition(&g, 1.0, &cfg).unwrap();
        assert!(z.within(exact.log_z, 3.0), "{z:?} vs {}", exact.log_z);
        let c = estimate_observables_weighted(&g, 1.0, &cfg, &[Observable::Correlation(0, 1), Observable::Magnetization(0)])
            .unwrap();
        assert!(c[0].within(1f64.tanh(), 3.0), "{:?}", c[0]);
        assert!(c[1].within(0.0, 3.0), "{:?}", c[1]);
    }

    #[test]
    fn ring_matches_brute_force() {
        let g = CouplingGraph::new(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)], vec![0.1; 4]).unwrap();
        let beta = 0.5;
        let exact = brute_force(&g, beta).unwrap();
        let cfg = DirectConfig::new(200_000, 5);
        let z = estimate_partition(&g, beta, &cfg).unwrap();
        assert!(z.within(exact.log_z, 3.0), "{z:?} vs {}", exact.log_z);
        let obs = [Observable::Correlation(0, 1), Observable::Correlation(0, 2), Observable::Magnetization(3)];
        let est = estimate_observables_weighted(&g, beta, &cfg, &obs).unwrap();
        assert!(est[0].within(exact.correlation(0, 1).unwrap(), 3.0));
        assert!(est[1].within(brute_force_pair(&g, beta, 0, 2), 3.0));
        assert!(est[2].within(exact.magnetization[3], 3.0));
    }

    fn brute_force_pair(g: &CouplingGraph, beta: f64, a: usize, b: usize) -> f64 {
        crate::exact::brute_force_pairs(g, beta, &[(a, b)]).unwrap().correlation(a, b).unwrap()
    }

    #[test]
    fn estimates_depend_on_products_only() {
        for c in [2.0, 0.25, 8.0] {
            let a = CouplingGraph::new(3, &[(0, 1, 1.0), (1, 2, 0.5)], vec![0.3, 0.0, -0.2]).unwrap();
            let b = a.scaled(c);
            let mut ra = ChaCha8Rng::seed_from_u64(2);
            let mut rb = ChaCha8Rng::seed_from_u64(2);
            for _ in 0..50 {
                let sa = sample_direct(&a, 0.7, &mut ra);
                let sb = sample_direct(&b, 0.7 / c, &mut rb);
                assert_eq!(sa, sb);
            }
        }
    }

    #[test]
    fn executors_agree_bitwise() {
        let g = build_rectangular_lattice(3, 3, 1.0, 0.0, true).unwrap();
        let obs = [Observable::NearestNeighbour];
        let seq = DirectConfig { executor: Executor::Sequential, ..DirectConfig::new(10_000, 77) };
        let par = DirectConfig { executor: Executor::with_threads(4), ..seq };
        assert_eq!(estimate_partition(&g, 0.4, &seq).unwrap(), estimate_partition(&g, 0.4, &par).unwrap());
        assert_eq!(
            estimate_observables_weighted(&g, 0.4, &seq, &obs).unwrap(),
            estimate_observables_weighted(&g, 0.4, &par, &obs).unwrap()
        );
    }

    #[test]
    fn tanh_is_symmetric_without_field() {
        let g = two_site(1.0, 0.0);
        let mut third = Accumulator::new();
        for t in 0..50_000u64 {
            let mut rng = trajectory_rng(13, StreamPurpose::Synthetic, t);
            let m = sample_direct(&g, 1.0, &mut rng).r[0].tanh();
            third.push(m * m * m).unwrap();
        }
        assert!(third.estimate().within(0.0, 3.0));
    }

    #[test]
    fn dispersion_grows_with_beta() {
        let cfg = DirectConfig::new(20_000, 1);
        let g = two_site(1.0, 0.0);
        let betas = [0.0, 0.2, 0.5, 1.0, 1.5, 2.0];
        let report = weight_dispersion_report(&g, &betas, &cfg).unwrap();
        assert_eq!(report[0].log_weight_variance, 0.0);
        for pair in report.windows(2) {
            assert!(pair[1].log_weight_variance >= pair[0].log_weight_variance, "{report:?}");
        }
        let lattice = build_rectangular_lattice(10, 10, 1.0, 0.0, true).unwrap();
        let big = weight_dispersion_report(&lattice, &[0.4], &cfg).unwrap()[0];
        let small = weight_dispersion_report(&g, &[0.4], &cfg).unwrap()[0];
        assert!(big.log_weight_variance > small.log_weight_variance);
    }

    #[test]
    fn config_is_validated() {
        let g = two_site(1.0, 0.0);
        assert!(estimate_partition(&g, 1.0, &DirectConfig::new(1, 0)).is_err());
        assert!(estimate_partition(&g, -1.0, &DirectConfig::new(10, 0)).is_err());
        assert!(weight_dispersion_report(&g, &[1.0], &DirectConfig::new(50, 0)).is_err());
        assert!(estimate_observables_weighted(&g, 1.0, &DirectConfig::new(10, 0), &[Observable::Correlation(0, 5)]).is_err());
    }
}

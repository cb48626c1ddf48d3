//! Unweighted Langevin sampler.
//!
//! The link noises relax in a fictitious time `τ` under
//!
//! `dW_ij/dτ = −W_ij + (βJ_ij/2)(m_i + m_j) + ξ_ij`, `⟨ξ_ij ξ_ij⟩ = βJ_ij δ(τ − τ′)`,
//!
//! with `m_i = tanh R_i`. This is gradient descent on
//! `V = Σ_ordered W²/(βJ) − Σ_i ln cosh R_i` with diffusion `βJ` per link,
//! so the stationary density is `∝ e^{−V}` and already carries the
//! kernel-trace weight: stationary averages of `m_i` and `m_i m_j` are the
//! thermal `⟨σ_i⟩` and `⟨σ_i σ_j⟩` without reweighting.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::algebra::log_two_cosh;
use crate::direct::{site_variables, site_variables_into};
use crate::ensemble::{trajectory_rng, Executor, StreamPurpose};
use crate::model::CouplingGraph;
use crate::observable::Observable;
use crate::stats::{chi_square_fit, Accumulator, ChiSquare, Estimate, Histogram};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinConfig {
    pub beta: f64,
    /// Fictitious-time step `Δτ`.
    pub step: f64,
    /// Fixed-point passes of the midpoint solve per step.
    pub iterations: usize,
    pub trajectories: usize,
    /// Initial `τ` interval that is discarded.
    pub burn_in: f64,
    /// `τ` interval between retained samples.
    pub measure_every: f64,
    pub total_tau: f64,
    pub seed: u64,
    pub executor: Executor,
    /// Optional cheaper start: integrate the first part of the burn-in
    /// with a larger step before switching to `step`.
    pub relax: Option<Relaxation>,
}

/// Leading interval `[0, tau)` integrated with `step` instead of the
/// measurement step. The switch must happen inside the burn-in, so
/// retained samples only see the measurement step's discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relaxation {
    pub step: f64,
    pub tau: f64,
}

impl Default for LangevinConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            step: 0.05,
            iterations: 3,
            trajectories: 1000,
            burn_in: 10.0,
            measure_every: 0.25,
            total_tau: 50.0,
            seed: 0,
            executor: Executor::default(),
            relax: None,
        }
    }
}

impl LangevinConfig {
    /// One sample per trajectory at fictitious time `tau`: the ensemble
    /// average at a fixed time rather than a time average.
    pub fn snapshot(beta: f64, tau: f64, trajectories: usize, seed: u64) -> Self {
        let base = Self::default();
        Self {
            beta,
            trajectories,
            seed,
            burn_in: tau,
            measure_every: 1.0,
            total_tau: tau + 0.5,
            ..base
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let fail = |m: String| Err(Error::Config(m));
        if self.beta <= 0.0 || !self.beta.is_finite() {
            return fail(format!("inverse temperature {} must be positive", self.beta));
        }
        if self.step <= 0.0 || !self.step.is_finite() {
            return fail(format!("step {} must be positive", self.step));
        }
        if self.iterations == 0 {
            return fail("at least one midpoint iteration is required".into());
        }
        if self.trajectories < 2 {
            return fail(format!("need at least 2 trajectories, got {}", self.trajectories));
        }
        if !(self.burn_in >= 0.0) || !(self.burn_in < self.total_tau) || !self.total_tau.is_finite() {
            return fail(format!("burn-in {} must lie in [0, total_tau = {})", self.burn_in, self.total_tau));
        }
        if !(self.measure_every >= self.step) {
            return fail(format!("measure_every {} is shorter than the step {}", self.measure_every, self.step));
        }
        if let Some(relax) = self.relax {
            if relax.step <= 0.0 || !relax.step.is_finite() {
                return fail(format!("relaxation step {} must be positive", relax.step));
            }
            if !(relax.tau >= 0.0) || !(relax.tau <= self.burn_in) {
                return fail(format!("relaxation time {} must lie in [0, burn_in = {}]", relax.tau, self.burn_in));
            }
        }
        Ok(())
    }

    fn steps(&self, tau: f64) -> usize {
        (tau / self.step).round() as usize
    }

    /// Steps taken with the relaxation step before the main schedule.
    fn relax_steps(&self) -> usize {
        self.relax.map_or(0, |r| (r.tau / r.step).round() as usize)
    }

    /// Main-schedule step indices, counted from the end of the relaxation:
    /// first sample, stride and last step.
    fn schedule(&self) -> (usize, usize, usize) {
        let origin = self.relax.map_or(0.0, |r| r.tau);
        (
            self.steps(self.burn_in - origin),
            self.steps(self.measure_every).max(1),
            self.steps(self.total_tau - origin),
        )
    }

    /// Samples each trajectory contributes.
    pub fn samples_per_trajectory(&self) -> usize {
        let (burn, stride, total) = self.schedule();
        if total < burn {
            0
        } else {
            (total - burn) / stride + 1
        }
    }
}

/// One trajectory: ordered link noises (slots `2e`, `2e + 1` for edge
/// `e`), the cached site variables and the fictitious time.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinState {
    pub w: Vec<f64>,
    pub r: Vec<f64>,
    pub tau: f64,
}

impl LangevinState {
    pub fn zeros(graph: &CouplingGraph, beta: f64) -> Self {
        let w = vec![0.0; 2 * graph.edges().len()];
        let r = site_variables(graph, beta, &w);
        Self { w, r, tau: 0.0 }
    }

    pub fn from_noise(graph: &CouplingGraph, beta: f64, w: Vec<f64>) -> Self {
        let r = site_variables(graph, beta, &w);
        Self { w, r, tau: 0.0 }
    }

    /// Largest difference between the cached and recomputed `R`.
    pub fn cache_error(&self, graph: &CouplingGraph, beta: f64) -> f64 {
        site_variables(graph, beta, &self.w)
            .iter()
            .zip(&self.r)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn magnetizations(&self) -> Vec<f64> {
        self.r.iter().map(|r| r.tanh()).collect()
    }
}

fn check_potential_args(graph: &CouplingGraph, w: &[f64], beta: f64) -> Result<(), Error> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(Error::Config(format!("potential needs beta > 0, got {beta}")));
    }
    if w.len() != 2 * graph.edges().len() {
        return Err(Error::Config(format!("expected {} link slots, got {}", 2 * graph.edges().len(), w.len())));
    }
    Ok(())
}

/// `ln cosh x` without overflow.
fn log_cosh(x: f64) -> f64 {
    log_two_cosh(x) - std::f64::consts::LN_2
}

/// `V = Σ_ordered W²/(Jβ) − Σ_i ln cosh R_i`.
pub fn potential(graph: &CouplingGraph, w: &[f64], beta: f64) -> Result<f64, Error> {
    check_potential_args(graph, w, beta)?;
    let gauss: f64 = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| (w[2 * e] * w[2 * e] + w[2 * e + 1] * w[2 * e + 1]) / (edge.coupling * beta))
        .sum();
    let r = site_variables(graph, beta, w);
    Ok(gauss - r.iter().map(|&x| log_cosh(x)).sum::<f64>())
}

/// `∂V/∂W_ij = 2W_ij/(J_ij β) − m_i − m_j` for every ordered slot.
pub fn potential_gradient(graph: &CouplingGraph, w: &[f64], beta: f64) -> Result<Vec<f64>, Error> {
    check_potential_args(graph, w, beta)?;
    let m: Vec<f64> = site_variables(graph, beta, w).iter().map(|r| r.tanh()).collect();
    let mut grad = Vec::with_capacity(w.len());
    for (e, edge) in graph.edges().iter().enumerate() {
        let pull = m[edge.i] + m[edge.j];
        for slot in [2 * e, 2 * e + 1] {
            grad.push(2.0 * w[slot] / (edge.coupling * beta) - pull);
        }
    }
    Ok(grad)
}

/// Deterministic part of `dW/dτ`, `−W + (βJ/2)(m_i + m_j)`, evaluated
/// with site variables `r`.
pub fn drift(graph: &CouplingGraph, w: &[f64], r: &[f64], beta: f64, out: &mut [f64]) {
    let m: Vec<f64> = r.iter().map(|x| x.tanh()).collect();
    drift_from_magnetizations(graph, w, &m, beta, out);
}

fn drift_from_magnetizations(graph: &CouplingGraph, w: &[f64], m: &[f64], beta: f64, out: &mut [f64]) {
    for (e, edge) in graph.edges().iter().enumerate() {
        let pull = 0.5 * beta * edge.coupling * (m[edge.i] + m[edge.j]);
        out[2 * e] = -w[2 * e] + pull;
        out[2 * e + 1] = -w[2 * e + 1] + pull;
    }
}

/// Scratch buffers reused across steps.
#[derive(Debug, Clone, Default)]
pub struct StepBuffers {
    mid: Vec<f64>,
    r_mid: Vec<f64>,
    m_mid: Vec<f64>,
    drift: Vec<f64>,
    increments: Vec<f64>,
}

/// One midpoint step with given Wiener increments `ΔB` (one per ordered
/// slot): starting from `W_mid = Wⁿ`, iterate
/// `W_mid ← Wⁿ + (Δτ/2)·drift(W_mid) + ΔB/2`, then `Wⁿ⁺¹ = 2W_mid − Wⁿ`.
pub fn step_with_increments(
    state: &mut LangevinState,
    graph: &CouplingGraph,
    config: &LangevinConfig,
    increments: &[f64],
    buffers: &mut StepBuffers,
) {
    let n = state.w.len();
    let half = 0.5 * config.step;
    let StepBuffers { mid, r_mid, m_mid, drift: d, .. } = buffers;
    mid.clear();
    mid.extend_from_slice(&state.w);
    r_mid.clear();
    r_mid.extend_from_slice(&state.r);
    d.resize(n, 0.0);
    for _ in 0..config.iterations {
        m_mid.clear();
        m_mid.extend(r_mid.iter().map(|x| x.tanh()));
        drift_from_magnetizations(graph, mid, m_mid, config.beta, d);
        for k in 0..n {
            mid[k] = state.w[k] + half * d[k] + 0.5 * increments[k];
        }
        site_variables_into(graph, config.beta, mid, r_mid);
    }
    for (w, m) in state.w.iter_mut().zip(mid.iter()) {
        *w = 2.0 * m - *w;
    }
    site_variables_into(graph, config.beta, &state.w, &mut state.r);
    state.tau += config.step;
}

/// Draws `ΔB ~ N(0, βJΔτ)` per ordered slot and takes one midpoint step.
pub fn step_semi_implicit<R: Rng + ?Sized>(
    state: &mut LangevinState,
    graph: &CouplingGraph,
    config: &LangevinConfig,
    rng: &mut R,
    buffers: &mut StepBuffers,
) {
    let mut increments = std::mem::take(&mut buffers.increments);
    increments.clear();
    for edge in graph.edges() {
        let sd = (config.beta * edge.coupling * config.step).sqrt();
        for _ in 0..2 {
            let x: f64 = rng.sample(StandardNormal);
            increments.push(sd * x);
        }
    }
    step_with_increments(state, graph, config, &increments, buffers);
    buffers.increments = increments;
}

/// Runs trajectory `index` from `W = 0` to `total_tau`, calling `record`
/// with the state at every retained sample time.
pub fn run_trajectory<F>(graph: &CouplingGraph, config: &LangevinConfig, index: usize, mut record: F) -> Result<(), Error>
where
    F: FnMut(&LangevinState),
{
    let (burn, stride, total) = config.schedule();
    let mut rng = trajectory_rng(config.seed, StreamPurpose::LangevinNoise, index as u64);
    let mut state = LangevinState::zeros(graph, config.beta);
    let mut buffers = StepBuffers::default();
    let diverged = |state: &LangevinState| state.r.iter().any(|r| !r.is_finite());
    if let Some(relax) = config.relax {
        let coarse = LangevinConfig { step: relax.step, ..*config };
        for _ in 0..config.relax_steps() {
            step_semi_implicit(&mut state, graph, &coarse, &mut rng, &mut buffers);
            if diverged(&state) {
                return Err(Error::Divergence { trajectory: index, tau: state.tau, beta: config.beta });
            }
        }
    }
    for n in 0..=total {
        if n > 0 {
            step_semi_implicit(&mut state, graph, config, &mut rng, &mut buffers);
            if diverged(&state) {
                return Err(Error::Divergence { trajectory: index, tau: state.tau, beta: config.beta });
            }
        }
        if n >= burn && (n - burn) % stride == 0 {
            record(&state);
        }
    }
    Ok(())
}

/// Ensemble estimates of a set of observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub observables: Vec<Observable>,
    /// Mean over trajectories of each trajectory's time average, with the
    /// standard error across trajectories.
    pub estimates: Vec<Estimate>,
    pub trajectories: usize,
    pub samples_per_trajectory: usize,
}

impl EnsembleResult {
    pub fn estimate(&self, observable: Observable) -> Option<Estimate> {
        self.observables.iter().position(|&o| o == observable).map(|k| self.estimates[k])
    }
}

/// Evolves `config.trajectories` independent trajectories and averages the
/// observables over the stationary part of each.
pub fn run_ensemble(graph: &CouplingGraph, config: &LangevinConfig, observables: &[Observable]) -> Result<EnsembleResult, Error> {
    config.validate()?;
    for o in observables {
        o.validate(graph).map_err(Error::Config)?;
    }
    let means = config.executor.try_map_indexed(config.trajectories, |t| {
        let mut acc = vec![Accumulator::new(); observables.len()];
        let mut m = Vec::with_capacity(graph.sites());
        run_trajectory(graph, config, t, |state| {
            m.clear();
            m.extend(state.r.iter().map(|r| r.tanh()));
            for (a, o) in acc.iter_mut().zip(observables) {
                // Finite because tanh is bounded.
                let _ = a.push(o.evaluate(graph, &m));
            }
        })?;
        Ok::<Vec<f64>, Error>(acc.iter().map(Accumulator::mean).collect())
    })?;
    let mut ensemble = vec![Accumulator::new(); observables.len()];
    for traj in &means {
        for (a, &v) in ensemble.iter_mut().zip(traj) {
            a.push(v)?;
        }
    }
    Ok(EnsembleResult {
        observables: observables.to_vec(),
        estimates: ensemble.iter().map(Accumulator::estimate).collect(),
        trajectories: config.trajectories,
        samples_per_trajectory: config.samples_per_trajectory(),
    })
}

/// Stationary density of `R` on a single bond with `s = βJ`, `h = 0`:
/// `p(R) ∝ e^{−R²/(2s)} cosh²R`, which is the Gaussian mixture
/// `[N(0, s) + e^{2s}(N(2s, s) + N(−2s, s))/2] / (1 + e^{2s})`.
#[derive(Debug, Clone, Copy)]
pub struct TwoSiteMarginal {
    s: f64,
    centre_weight: f64,
}

impl TwoSiteMarginal {
    pub fn new(s: f64) -> Self {
        // 1/(1 + e^{2s}) without overflow.
        let centre_weight = 0.5 * (1.0 - s.tanh());
        Self { s, centre_weight }
    }

    fn components(&self) -> [(f64, f64, Normal); 3] {
        let sd = self.s.sqrt();
        let side = 0.5 * (1.0 - self.centre_weight);
        let normal = |mu: f64| Normal::new(mu, sd).expect("positive variance");
        [
            (self.centre_weight, 0.0, normal(0.0)),
            (side, 2.0 * self.s, normal(2.0 * self.s)),
            (side, -2.0 * self.s, normal(-2.0 * self.s)),
        ]
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components().iter().map(|(w, _, n)| w * n.cdf(x)).sum()
    }

    /// Probability of `[a, b)`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.components()
            .iter()
            .map(|(w, mu, n)| {
                // Use the upper tail right of the mean to keep precision.
                if a >= *mu {
                    w * (n.sf(a) - n.sf(b))
                } else {
                    w * (n.cdf(b) - n.cdf(a))
                }
            })
            .sum()
    }

    /// Unnormalized density, for reference.
    pub fn log_density_unnormalized(&self, r: f64) -> f64 {
        -r * r / (2.0 * self.s) + 2.0 * log_cosh(r)
    }

    /// Exact draw from the mixture.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mu = if u < self.centre_weight {
            0.0
        } else if u < 0.5 * (1.0 + self.centre_weight) {
            2.0 * self.s
        } else {
            -2.0 * self.s
        };
        let z: f64 = rng.sample(StandardNormal);
        mu + self.s.sqrt() * z
    }
}

/// Goodness of fit of the sampled stationary `R` on a single bond.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCheck {
    pub fit: ChiSquare,
    /// Pearson test that mirrored bins `R` and `−R` hold equal counts.
    pub symmetry: ChiSquare,
    pub samples: u64,
    pub histogram: Histogram,
}

/// Samples `R` on the two-site model with `J = 1` at `config.beta` and
/// compares its histogram with [`TwoSiteMarginal`].
pub fn stationary_density_check_two_site(config: &LangevinConfig, bins: usize) -> Result<DensityCheck, Error> {
    config.validate()?;
    let graph = CouplingGraph::new(2, &[(0, 1, 1.0)], vec![0.0, 0.0])?;
    let s = config.beta;
    let marginal = TwoSiteMarginal::new(s);
    let half_width = 2.0 * s + 6.0 * s.sqrt();
    let empty = Histogram::new(-half_width, half_width, bins)?;
    let parts = config.executor.try_map_indexed(config.trajectories, |t| {
        let mut h = empty.clone();
        run_trajectory(&graph, config, t, |state| h.push(state.r[0]))?;
        Ok::<Histogram, Error>(h)
    })?;
    let mut histogram = empty;
    for h in &parts {
        histogram.merge(h);
    }
    let fit = chi_square_fit(&histogram, |a, b| marginal.mass(a, b))?;
    let symmetry = symmetry_test(&histogram)?;
    Ok(DensityCheck { fit, symmetry, samples: histogram.total(), histogram })
}

/// `Σ (n_k − n_k′)²/(n_k + n_k′)` over mirrored bin pairs with enough
/// counts; χ² with one degree of freedom per pair.
fn symmetry_test(h: &Histogram) -> Result<ChiSquare, Error> {
    use statrs::distribution::ChiSquared;
    let counts = h.counts();
    let mirrored = h.mirrored();
    let mirror = mirrored.counts();
    let mut statistic = 0.0;
    let mut pairs = 0usize;
    for k in 0..counts.len() / 2 {
        let (a, b) = (counts[k] as f64, mirror[k] as f64);
        if a + b >= 20.0 {
            statistic += (a - b) * (a - b) / (a + b);
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(crate::stats::StatsError::TooFewBins { retained: 0 }.into());
    }
    let dist = ChiSquared::new(pairs as f64).expect("positive degrees of freedom");
    Ok(ChiSquare { statistic, dof: pairs, p_value: dist.sf(statistic) })
}

/// One point of a correlation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub beta: f64,
    pub observable: Observable,
    pub estimate: Estimate,
}

/// Runs [`run_ensemble`] at each `β` (overriding `config.beta`).
pub fn correlation_sweep(
    graph: &CouplingGraph,
    betas: &[f64],
    config: &LangevinConfig,
    observables: &[Observable],
) -> Result<Vec<SweepPoint>, Error> {
    let mut points = Vec::with_capacity(betas.len() * observables.len());
    for &beta in betas {
        let cfg = LangevinConfig { beta, ..*config };
        let result = run_ensemble(graph, &cfg, observables)?;
        for (&observable, &estimate) in result.observables.iter().zip(&result.estimates) {
            points.push(SweepPoint { beta, observable, estimate });
        }
    }
    Ok(points)
}

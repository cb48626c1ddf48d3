//! Qubit coherent states, kernel traces and dense reference operators.
//!
//! Basis conventions: a single qubit has `|0⟩` (spin down, `σᶻ = −1`) at
//! index 0 and `|1⟩` (spin up) at index 1. Multi-site states are tensor
//! products with site 0 varying fastest, so basis index `Σ_m l_m·n^m`
//! carries level `l_m` on site `m`.
//!
//! The un-normalized coherent state is
//! `‖z⟩ = ⊗_m (e^{−z_m/2}|0⟩ + e^{z_m/2}|1⟩)`, with inner product
//! `⟨z‖z′⟩ = ∏_m 2cosh((z_m* + z′_m)/2)`.

mod suite;
mod verify;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub use suite::{identity_suite, IdentityCheck};
pub use verify::{
    verify_bell_expansion, verify_completeness, verify_su2_differential_identities, verify_sun_identity,
    BellReport, DifferentialReport, DEFAULT_FD_STEP,
};

/// Largest site count for which dense `2^M` vectors are built.
pub const DEFAULT_MAX_DENSE_SITES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("dense state of {sites} sites exceeds the cap of {cap}")]
    Capacity { sites: usize, cap: usize },
    #[error("{0}")]
    Invalid(String),
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("kernel trace overflows double precision (log value {log_value})")]
    Overflow { log_value: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

fn invalid(msg: impl Into<String>) -> AlgebraError {
    AlgebraError::Invalid(msg.into())
}

/// `ln(2cosh x)` without overflow.
#[inline]
pub fn log_two_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// Phase-space coordinates of an off-diagonal kernel `‖z⟩⟨z′‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentAmplitudes {
    z: Vec<Complex64>,
    z_prime: Vec<Complex64>,
}

impl CoherentAmplitudes {
    pub fn new(z: Vec<Complex64>, z_prime: Vec<Complex64>) -> Result<Self, AlgebraError> {
        if z.is_empty() || z.len() != z_prime.len() {
            return Err(invalid(format!(
                "branches must have equal nonzero length (got {} and {})",
                z.len(),
                z_prime.len()
            )));
        }
        let amps = Self { z, z_prime };
        if amps.combined().iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) {
            return Err(invalid("combined variable R is not finite"));
        }
        Ok(amps)
    }

    pub fn sites(&self) -> usize {
        self.z.len()
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    pub fn z_prime(&self) -> &[Complex64] {
        &self.z_prime
    }

    /// `R_m = (z_m* + z′_m)/2`.
    pub fn combined(&self) -> Vec<Complex64> {
        self.z.iter().zip(&self.z_prime).map(|(z, zp)| (z.conj() + zp) * 0.5).collect()
    }

    /// `∏_m 2cosh(R_m)`.
    pub fn kernel_trace(&self) -> Complex64 {
        self.combined().iter().map(|r| 2.0 * r.cosh()).product()
    }

    /// Dense `‖z⟩⟨z′‖`. Its trace is `⟨z′‖z⟩ = ∏_m 2cosh(R_m*)`, the complex
    /// conjugate of [`CoherentAmplitudes::kernel_trace`]; the two agree for
    /// real `R`.
    pub fn kernel_operator(&self, cap: usize) -> Result<DMatrix<Complex64>, AlgebraError> {
        let ket = build_su2_state_with_cap(&self.z, cap)?;
        let bra = build_su2_state_with_cap(&self.z_prime, cap)?;
        let d = ket.dimension();
        Ok(DMatrix::from_fn(d, d, |a, b| ket.amplitudes[a] * bra.amplitudes[b].conj()))
    }
}

/// A dense state in the tensor-product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub levels: usize,
    pub sites: usize,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(levels: usize, sites: usize, amplitudes: Vec<Complex64>) -> Result<Self, AlgebraError> {
        let dim = levels
            .checked_pow(sites as u32)
            .ok_or_else(|| invalid("state dimension overflows"))?;
        if amplitudes.len() != dim {
            return Err(invalid(format!("expected {dim} amplitudes, got {}", amplitudes.len())));
        }
        Ok(Self { levels, sites, amplitudes })
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn dot(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Tensor product of per-site amplitude vectors, site 0 fastest.
fn tensor_product(rows: &[Vec<Complex64>], levels: usize) -> StateVector {
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    for row in rows {
        // The new site becomes the slowest-varying index.
        let mut next = Vec::with_capacity(amps.len() * levels);
        for c in row {
            next.extend(amps.iter().map(|a| a * c));
        }
        amps = next;
    }
    StateVector { levels, sites: rows.len(), amplitudes: amps }
}

/// `‖z⟩` with the default dense cap.
pub fn build_su2_state(z: &[Complex64]) -> Result<StateVector, AlgebraError> {
    build_su2_state_with_cap(z, DEFAULT_MAX_DENSE_SITES)
}

pub fn build_su2_state_with_cap(z: &[Complex64], cap: usize) -> Result<StateVector, AlgebraError> {
    if z.is_empty() {
        return Err(invalid("at least one site is required"));
    }
    if z.len() > cap {
        return Err(AlgebraError::Capacity { sites: z.len(), cap });
    }
    let rows: Vec<Vec<Complex64>> = z.iter().map(|z| vec![(-z * 0.5).exp(), (z * 0.5).exp()]).collect();
    Ok(tensor_product(&rows, 2))
}

/// `⟨z_a‖z_b⟩ = 2^M ∏_m cosh((z_b,m + z_a,m*)/2)`.
pub fn inner_product_su2(za: &[Complex64], zb: &[Complex64]) -> Result<Complex64, AlgebraError> {
    if za.len() != zb.len() {
        return Err(invalid(format!("site counts differ ({} vs {})", za.len(), zb.len())));
    }
    Ok(za.iter().zip(zb).map(|(a, b)| 2.0 * ((a.conj() + b) * 0.5).cosh()).product())
}

/// Real combined variables of the phase-averaged kernel `∏_m exp(R_m σᶻ_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTraceInput {
    r: Vec<f64>,
}

impl KernelTraceInput {
    pub fn new(r: Vec<f64>) -> Result<Self, AlgebraError> {
        if let Some(x) = r.iter().find(|x| !x.is_finite()) {
            return Err(invalid(format!("kernel variable {x} is not finite")));
        }
        Ok(Self { r })
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }

    pub fn sites(&self) -> usize {
        self.r.len()
    }
}

/// `Σ_m ln(2cosh R_m)`, the canonical form of the kernel trace.
pub fn log_kernel_trace(input: &KernelTraceInput) -> f64 {
    input.r.iter().map(|&x| log_two_cosh(x)).sum()
}

/// `∏_m 2cosh R_m`, when representable.
pub fn kernel_trace(input: &KernelTraceInput) -> Result<f64, AlgebraError> {
    let log_value = log_kernel_trace(input);
    let value = log_value.exp();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(AlgebraError::Overflow { log_value })
    }
}

/// `Tr(σᶻ_i Λ_z(R)) = tanh(R_i) ∏_m 2cosh R_m`.
pub fn sigma_z_weighted_trace(input: &KernelTraceInput, site: usize) -> Result<f64, AlgebraError> {
    let r = input
        .r
        .get(site)
        .ok_or_else(|| invalid(format!("site {site} out of range for {} sites", input.sites())))?;
    Ok(r.tanh() * kernel_trace(input)?)
}

fn spin_of(index: usize, site: usize) -> f64 {
    if index >> site & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `Tr ∏_m exp(R_m σᶻ_m)` summed over the diagonal of the dense operator.
pub fn dense_kernel_trace(input: &KernelTraceInput) -> Result<f64, AlgebraError> {
    dense_weighted_trace(input, None)
}

/// `Tr(σᶻ_i ∏_m exp(R_m σᶻ_m))` summed over the dense diagonal.
pub fn dense_sigma_z_trace(input: &KernelTraceInput, site: usize) -> Result<f64, AlgebraError> {
    if site >= input.sites() {
        return Err(invalid(format!("site {site} out of range for {} sites", input.sites())));
    }
    dense_weighted_trace(input, Some(site))
}

fn dense_weighted_trace(input: &KernelTraceInput, site: Option<usize>) -> Result<f64, AlgebraError> {
    let m = input.sites();
    if m > DEFAULT_MAX_DENSE_SITES {
        return Err(AlgebraError::Capacity { sites: m, cap: DEFAULT_MAX_DENSE_SITES });
    }
    Ok((0..1usize << m)
        .map(|idx| {
            let diag: f64 = (0..m).map(|j| (input.r[j] * spin_of(idx, j)).exp()).product();
            site.map_or(diag, |i| spin_of(idx, i) * diag)
        })
        .sum())
}

/// Per-site amplitude pairs `ψ_m` (rows) and `φ_m` for SU(n) lattice states.
#[derive(Debug, Clone, PartialEq)]
pub struct SunAmplitudes {
    pub psi: DMatrix<Complex64>,
    pub phi: DMatrix<Complex64>,
}

impl SunAmplitudes {
    pub fn new(psi: DMatrix<Complex64>, phi: DMatrix<Complex64>) -> Result<Self, AlgebraError> {
        if psi.shape() != phi.shape() {
            return Err(invalid("psi and phi must have the same shape"));
        }
        if psi.ncols() < 2 || psi.nrows() == 0 {
            return Err(invalid("need at least one site and two levels"));
        }
        for (name, m) in [("psi", &psi), ("phi", &phi)] {
            if let Some(row) = (0..m.nrows()).find(|&r| m.row(r).iter().all(|c| c.norm_sqr() == 0.0)) {
                return Err(invalid(format!("{name} row {row} is the zero vector")));
            }
        }
        Ok(Self { psi, phi })
    }

    /// One site, both branches equal.
    pub fn single(psi: &[Complex64]) -> Result<Self, AlgebraError> {
        let m = DMatrix::from_row_slice(1, psi.len(), psi);
        Self::new(m.clone(), m)
    }

    pub fn sites(&self) -> usize {
        self.psi.nrows()
    }

    pub fn levels(&self) -> usize {
        self.psi.ncols()
    }
}

/// `‖ψ⟩^{(n,M)} = ⊗_m Σ_μ ψ_m^μ |μ⟩_m`.
pub fn build_sun_state(psi: &DMatrix<Complex64>, cap: usize) -> Result<StateVector, AlgebraError> {
    let (m, n) = psi.shape();
    let bits = (m as f64) * (n as f64).log2();
    if bits > cap as f64 {
        return Err(AlgebraError::Capacity { sites: m, cap });
    }
    let rows: Vec<Vec<Complex64>> = (0..m).map(|r| psi.row(r).iter().copied().collect()).collect();
    Ok(tensor_product(&rows, n))
}

/// `⟨z|ρ|z⟩` with the normalized state `|z⟩ = ‖z⟩/∏_m √(2cosh Re z_m)`.
pub fn q_function(rho: &DMatrix<Complex64>, z: &[Complex64]) -> Result<f64, AlgebraError> {
    let state = build_su2_state(z)?;
    let d = state.dimension();
    if rho.shape() != (d, d) {
        return Err(invalid(format!("density matrix is {:?}, expected {d}×{d}", rho.shape())));
    }
    let scale = rho.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    let deviation = (rho - rho.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if deviation > 1e-12 * scale {
        return Err(AlgebraError::NotHermitian { deviation });
    }
    let log_norm: f64 = z.iter().map(|z| log_two_cosh(z.re)).sum();
    let v = nalgebra::DVector::from_column_slice(&state.amplitudes);
    let value = (v.adjoint() * rho * &v)[(0, 0)];
    Ok(value.re * (-log_norm).exp())
}

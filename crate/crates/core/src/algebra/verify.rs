//! Numerical checks of the coherent-state operator identities.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{build_su2_state, build_sun_state, invalid, AlgebraError, StateVector, SunAmplitudes, DEFAULT_MAX_DENSE_SITES};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Largest number of quadrature nodes visited by [`verify_completeness`].
const MAX_QUADRATURE_NODES: usize = 1 << 24;

/// Worst relative errors of the qubit differential identities over all
/// sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferentialReport {
    /// `∂_z ‖z⟩ = ½σᶻ‖z⟩`.
    pub sigma_z: f64,
    /// `e^{−z}[½ + ∂_z]‖z⟩ = σ⁺‖z⟩`.
    pub sigma_plus: f64,
    /// `e^{z}[½ − ∂_z]‖z⟩ = σ⁻‖z⟩`.
    pub sigma_minus: f64,
    /// `∂_r‖z⟩ = −i∂_φ‖z⟩` for `z = r + iφ`.
    pub cauchy: f64,
}

impl DifferentialReport {
    pub fn worst(&self) -> f64 {
        self.sigma_z.max(self.sigma_plus).max(self.sigma_minus).max(self.cauchy)
    }
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn relative_error(lhs: &[Complex64], rhs: &[Complex64], scale: f64) -> f64 {
    let diff: Vec<Complex64> = lhs.iter().zip(rhs).map(|(a, b)| a - b).collect();
    max_abs(&diff) / scale
}

/// Apply a single-site 2×2 operator (given as a closure on `(row, col)`)
/// to site `m` of a qubit state.
fn apply_site(state: &StateVector, m: usize, op: impl Fn(usize, usize) -> Complex64) -> Vec<Complex64> {
    let bit = 1usize << m;
    (0..state.dimension())
        .map(|idx| {
            let row = idx >> m & 1;
            let base = idx & !bit;
            op(row, 0) * state.amplitudes[base] + op(row, 1) * state.amplitudes[base | bit]
        })
        .collect()
}

/// Central difference of `‖z⟩` in `z_m` along `direction`.
fn directional_derivative(z: &[Complex64], m: usize, h: f64, direction: Complex64) -> Result<Vec<Complex64>, AlgebraError> {
    let mut up = z.to_vec();
    let mut down = z.to_vec();
    up[m] += direction * h;
    down[m] -= direction * h;
    let up = build_su2_state(&up)?;
    let down = build_su2_state(&down)?;
    Ok(up.amplitudes.iter().zip(&down.amplitudes).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// Errors of the differential identities at any step, without the range
/// check on `h`.
pub(crate) fn differential_errors(z: &[Complex64], h: f64) -> Result<DifferentialReport, AlgebraError> {
    let state = build_su2_state(z)?;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut report = DifferentialReport { sigma_z: 0.0, sigma_plus: 0.0, sigma_minus: 0.0, cauchy: 0.0 };
    for (m, &zm) in z.iter().enumerate() {
        let d_r = directional_derivative(z, m, h, one)?;
        let d_phi = directional_derivative(z, m, h, Complex64::i())?;
        let minus_i_d_phi: Vec<Complex64> = d_phi.iter().map(|d| -Complex64::i() * d).collect();
        report.cauchy = report.cauchy.max(relative_error(&d_r, &minus_i_d_phi, max_abs(&d_r)));

        let sz = apply_site(&state, m, |r, c| match (r, c) {
            (0, 0) => -one * 0.5,
            (1, 1) => one * 0.5,
            _ => zero,
        });
        report.sigma_z = report.sigma_z.max(relative_error(&d_r, &sz, max_abs(&sz)));

        let plus = apply_site(&state, m, |r, c| if (r, c) == (1, 0) { one } else { zero });
        let lhs: Vec<Complex64> =
            state.amplitudes.iter().zip(&d_r).map(|(s, d)| (-zm).exp() * (s * 0.5 + d)).collect();
        report.sigma_plus = report.sigma_plus.max(relative_error(&lhs, &plus, max_abs(&plus)));

        let minus = apply_site(&state, m, |r, c| if (r, c) == (0, 1) { one } else { zero });
        let lhs: Vec<Complex64> =
            state.amplitudes.iter().zip(&d_r).map(|(s, d)| zm.exp() * (s * 0.5 - d)).collect();
        report.sigma_minus = report.sigma_minus.max(relative_error(&lhs, &minus, max_abs(&minus)));
    }
    Ok(report)
}

/// Checks the qubit differential identities on `‖z⟩` by central finite
/// differences with step `h ∈ (0, 1e-3]`.
pub fn verify_su2_differential_identities(z: &[Complex64], h: f64) -> Result<DifferentialReport, AlgebraError> {
    if !(h > 0.0 && h <= 1e-3) {
        return Err(invalid(format!("finite-difference step {h} outside (0, 1e-3]")));
    }
    differential_errors(z, h)
}

/// Relative error of `R̂_m^{μν}‖ψ⟩ = ψ_m^ν ∂/∂ψ_m^μ ‖ψ⟩`, with
/// `R̂^{μν} = Σ_j |μ⟩_j⟨ν|_j`. Only multiplicity `N = 1` is supported.
pub fn verify_sun_identity(
    amps: &SunAmplitudes,
    site: usize,
    mu: usize,
    nu: usize,
    multiplicity: usize,
) -> Result<f64, AlgebraError> {
    if multiplicity != 1 {
        return Err(AlgebraError::Unsupported(format!(
            "SU(n) identities with multiplicity N = {multiplicity}; only N = 1 is implemented"
        )));
    }
    let n = amps.levels();
    if site >= amps.sites() || mu >= n || nu >= n {
        return Err(invalid(format!("site {site} or levels ({mu}, {nu}) out of range")));
    }
    let psi = &amps.psi;
    let state = build_sun_state(psi, DEFAULT_MAX_DENSE_SITES)?;
    let stride = n.pow(site as u32);

    let generator: Vec<Complex64> = (0..state.dimension())
        .map(|idx| {
            let level = idx / stride % n;
            if level == mu {
                state.amplitudes[idx - mu * stride + nu * stride]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();

    let h = DEFAULT_FD_STEP;
    let mut up = psi.clone();
    let mut down = psi.clone();
    up[(site, mu)] += h;
    down[(site, mu)] -= h;
    let up = build_sun_state(&up, DEFAULT_MAX_DENSE_SITES)?;
    let down = build_sun_state(&down, DEFAULT_MAX_DENSE_SITES)?;
    let weight = psi[(site, nu)];
    let derivative: Vec<Complex64> = up
        .amplitudes
        .iter()
        .zip(&down.amplitudes)
        .map(|(a, b)| weight * (a - b) / (2.0 * h))
        .collect();
    let scale = max_abs(&generator).max(max_abs(&state.amplitudes));
    Ok(relative_error(&generator, &derivative, scale))
}

/// Deviation from the identity of the phase-quadrature resolution
/// `∫ d^{n−1}θ/(2π)^{n−1} ‖e^{iθ}⟩⟨e^{iθ}‖` with `points` trapezoid nodes
/// per angle. For `n = 2` the states are the qubit coherent states `‖iθ⟩`.
pub fn verify_completeness(levels: usize, points: usize) -> Result<f64, AlgebraError> {
    if levels < 2 {
        return Err(invalid("completeness needs at least two levels"));
    }
    if points < 2 {
        return Err(invalid("the phase quadrature needs at least two nodes"));
    }
    let angles = levels - 1;
    let nodes = (points as u128).pow(angles as u32);
    if nodes > MAX_QUADRATURE_NODES as u128 {
        return Err(AlgebraError::Capacity { sites: angles, cap: MAX_QUADRATURE_NODES });
    }
    let weight = 1.0 / nodes as f64;
    let phase: Vec<Complex64> = (0..points).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / points as f64)).collect();
    let mut sum = DMatrix::<Complex64>::zeros(levels, levels);
    let mut digits = vec![0usize; angles];
    let mut amps = vec![Complex64::new(0.0, 0.0); levels];
    for _ in 0..nodes {
        if levels == 2 {
            // ‖iθ⟩ = e^{−iθ/2}|0⟩ + e^{iθ/2}|1⟩.
            let half = Complex64::from_polar(1.0, PI * digits[0] as f64 / points as f64);
            amps[0] = half.conj();
            amps[1] = half;
        } else {
            amps[0] = Complex64::new(1.0, 0.0);
            for (a, &d) in amps[1..].iter_mut().zip(&digits) {
                *a = phase[d];
            }
        }
        for r in 0..levels {
            for c in 0..levels {
                sum[(r, c)] += amps[r] * amps[c].conj() * weight;
            }
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < points {
                break;
            }
            *d = 0;
        }
    }
    let identity = DMatrix::<Complex64>::identity(levels, levels);
    Ok((sum - identity).iter().map(|c| c.norm()).fold(0.0, f64::max))
}

/// Outcome of the Bell-state expansion check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellReport {
    /// Largest entrywise difference between `|ψ^B⟩⟨ψ^B|` and
    /// `½[‖ψ⁺⟩ − ‖ψ⁻⟩][⟨ψ⁺‖ − ⟨ψ⁻‖]`.
    pub deviation: f64,
    pub trace: f64,
    /// Smallest eigenvalue of the partial transpose over site 1; negative
    /// for an entangled state.
    pub partial_transpose_min_eigenvalue: f64,
}

impl BellReport {
    pub fn holds(&self) -> bool {
        self.deviation <= 1e-14 && (self.trace - 1.0).abs() <= 1e-14 && self.partial_transpose_min_eigenvalue < 0.0
    }
}

/// Expands the singlet `(|0,1⟩ − |1,0⟩)/√2` over the product states with
/// amplitude matrices `ψ⁺ = [[1,0],[0,1]]` and `ψ⁻ = [[0,1],[1,0]]`.
pub fn verify_bell_expansion() -> BellReport {
    let c = |x: f64| Complex64::new(x, 0.0);
    let plus = build_sun_state(&DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(1.0)]), 2)
        .expect("two sites fit the cap");
    let minus = build_sun_state(&DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]), 2)
        .expect("two sites fit the cap");

    // |l0, l1⟩ sits at index l0 + 2·l1.
    let mut bell = [c(0.0); 4];
    bell[2] = c(0.5f64.sqrt());
    bell[1] = c(-(0.5f64.sqrt()));
    let rho = DMatrix::from_fn(4, 4, |a, b| bell[a] * bell[b].conj());

    let diff: Vec<Complex64> = plus.amplitudes.iter().zip(&minus.amplitudes).map(|(p, m)| p - m).collect();
    let expansion = DMatrix::from_fn(4, 4, |a, b| diff[a] * diff[b].conj() * 0.5);
    let deviation = (&rho - &expansion).iter().map(|x| x.norm()).fold(0.0, f64::max);

    let transposed = DMatrix::from_fn(4, 4, |a, b| {
        let (a0, a1, b0, b1) = (a & 1, a >> 1, b & 1, b >> 1);
        rho[(a0 | b1 << 1, b0 | a1 << 1)]
    });
    let eigen = SymmetricEigen::new(transposed);
    let min = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    BellReport {
        deviation,
        trace: rho.trace().re,
        partial_transpose_min_eigenvalue: min,
    }
}

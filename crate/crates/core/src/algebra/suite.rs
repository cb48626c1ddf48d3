//! Fixed battery of algebra checks on seeded random inputs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    build_su2_state, dense_kernel_trace, dense_sigma_z_trace, inner_product_su2, kernel_trace, sigma_z_weighted_trace,
    verify_bell_expansion, verify_completeness, verify_su2_differential_identities, verify_sun_identity, AlgebraError,
    KernelTraceInput, SunAmplitudes, DEFAULT_FD_STEP,
};

/// Outcome of one family of checks: the worst deviation seen and the
/// tolerance it must stay below.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub deviation: f64,
    pub tolerance: f64,
    pub cases: usize,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

fn random_z(rng: &mut ChaCha8Rng, sites: usize) -> Vec<Complex64> {
    (0..sites).map(|_| Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5))).collect()
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn inner_products(rng: &mut ChaCha8Rng) -> Result<IdentityCheck, AlgebraError> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for sites in 1..=8 {
        for _ in 0..4 {
            let (za, zb) = (random_z(rng, sites), random_z(rng, sites));
            let dense = build_su2_state(&za)?.dot(&build_su2_state(&zb)?);
            worst = worst.max(relative(inner_product_su2(&za, &zb)?, dense));
            cases += 1;
        }
    }
    Ok(IdentityCheck { name: "su2_inner_product", deviation: worst, tolerance: 1e-12, cases })
}

fn kernel_traces(rng: &mut ChaCha8Rng) -> Result<IdentityCheck, AlgebraError> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for sites in 1..=8 {
        for _ in 0..4 {
            let input = KernelTraceInput::new((0..sites).map(|_| rng.random_range(-2.0..2.0)).collect())?;
            let (fast, dense) = (kernel_trace(&input)?, dense_kernel_trace(&input)?);
            worst = worst.max((fast - dense).abs() / dense.abs());
            let site = rng.random_range(0..sites);
            let (fast, dense) = (sigma_z_weighted_trace(&input, site)?, dense_sigma_z_trace(&input, site)?);
            // σᶻ traces can vanish; compare on the scale of the full trace.
            worst = worst.max((fast - dense).abs() / kernel_trace(&input)?);
            cases += 2;
        }
    }
    Ok(IdentityCheck { name: "kernel_trace", deviation: worst, tolerance: 1e-12, cases })
}

fn su2_differential(rng: &mut ChaCha8Rng) -> Result<IdentityCheck, AlgebraError> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for sites in 1..=4 {
        for _ in 0..3 {
            let z: Vec<Complex64> =
                (0..sites).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            worst = worst.max(verify_su2_differential_identities(&z, DEFAULT_FD_STEP)?.worst());
            cases += 1;
        }
    }
    Ok(IdentityCheck { name: "su2_differential", deviation: worst, tolerance: 1e-8, cases })
}

fn sun_differential(rng: &mut ChaCha8Rng) -> Result<IdentityCheck, AlgebraError> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (levels, sites) in [(3usize, 2usize), (4, 2), (3, 3)] {
        let psi = DMatrix::from_fn(sites, levels, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let amps = SunAmplitudes::new(psi.clone(), psi)?;
        for site in 0..sites {
            for mu in 0..levels {
                for nu in 0..levels {
                    worst = worst.max(verify_sun_identity(&amps, site, mu, nu, 1)?);
                    cases += 1;
                }
            }
        }
    }
    Ok(IdentityCheck { name: "sun_differential", deviation: worst, tolerance: 1e-8, cases })
}

fn completeness() -> Result<IdentityCheck, AlgebraError> {
    let mut worst = 0.0f64;
    for (levels, points) in [(2, 64), (3, 64), (4, 32)] {
        worst = worst.max(verify_completeness(levels, points)?);
    }
    Ok(IdentityCheck { name: "completeness", deviation: worst, tolerance: 1e-12, cases: 3 })
}

fn bell() -> IdentityCheck {
    let report = verify_bell_expansion();
    let deviation = if report.partial_transpose_min_eigenvalue < 0.0 {
        report.deviation.max((report.trace - 1.0).abs())
    } else {
        f64::INFINITY
    };
    IdentityCheck { name: "bell_expansion", deviation, tolerance: 1e-14, cases: 1 }
}

/// Runs every identity family with a fixed seed.
pub fn identity_suite() -> Result<Vec<IdentityCheck>, AlgebraError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a19e);
    Ok(vec![
        inner_products(&mut rng)?,
        kernel_traces(&mut rng)?,
        su2_differential(&mut rng)?,
        sun_differential(&mut rng)?,
        completeness()?,
        bell(),
    ])
}

use std::f64::consts::{FRAC_PI_2, PI};

use super::ExactError;

/// `β_c = ln(1 + √2)/2` for the square lattice with unit coupling.
pub const CRITICAL_BETA: f64 = 0.440_686_793_509_771_5;

/// Complete elliptic integral of the first kind `K(k)` (modulus `k`, not
/// parameter `m = k²`), by the arithmetic–geometric mean.
pub fn complete_elliptic_k(k: f64) -> f64 {
    assert!((0.0..=1.0).contains(&k.abs()), "modulus {k} outside [-1, 1]");
    elliptic_k_complementary((1.0 - k * k).sqrt())
}

/// `K` as a function of the complementary modulus `k' = √(1 − k²)`, which
/// stays accurate as `k → 1`.
fn elliptic_k_complementary(kp: f64) -> f64 {
    if kp == 0.0 {
        return f64::INFINITY;
    }
    let (mut a, mut b) = (1.0f64, kp);
    for _ in 0..64 {
        if (a - b).abs() <= 1e-15 * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    FRAC_PI_2 / a
}

/// Nearest-neighbour correlation of the infinite square lattice,
///
/// `⟨s s'⟩ = ½·coth(2K)·[1 + (2/π)(2tanh²(2K) − 1)·K(k)]`,
/// `K = βJ`, `k = 2 sinh(2K)/cosh²(2K)`,
///
/// i.e. minus the internal energy per bond.
pub fn onsager_nn_correlation(beta: f64, coupling: f64) -> Result<f64, ExactError> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(ExactError::Domain(format!("inverse temperature {beta} must be positive")));
    }
    if coupling <= 0.0 || !coupling.is_finite() {
        return Err(ExactError::Domain(format!("coupling {coupling} must be positive")));
    }
    let k2 = 2.0 * beta * coupling;
    if k2 > 40.0 {
        // coth → 1 and K(k) → π/2 to double precision.
        return Ok(1.0);
    }
    let t = k2.tanh();
    // 2tanh²(2K) − 1 = (sinh²2K − 1)/cosh²2K, and its magnitude is also the
    // complementary modulus k'. At the critical point it vanishes while K(k)
    // diverges logarithmically, so the product goes to zero.
    let slope = 2.0 * t * t - 1.0;
    let singular = if slope == 0.0 { 0.0 } else { slope * elliptic_k_complementary(slope.abs()) };
    Ok(0.5 / t * (1.0 + 2.0 / PI * singular))
}

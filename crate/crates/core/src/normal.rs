//! Standard normal density, distribution and quantile functions.
//!
//! The CDF goes through `erfc` so both tails keep full relative precision.

use libm::erfc;
use std::f64::consts::FRAC_1_SQRT_2;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// φ(x)
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Φ(x)
pub fn cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x), computed without cancellation.
pub fn sf(x: f64) -> f64 {
    cdf(-x)
}

/// Φ⁻¹(p) for p in (0, 1). Returns ∓∞ at the endpoints.
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    // rational start (|error| < 4.5e-4), then Halley steps on the accurate CDF
    let q = p.min(1.0 - p);
    let t = (-2.0 * q.ln()).sqrt();
    let mut x = t
        - (2.515_517 + 0.802_853 * t + 0.010_328 * t * t)
            / (1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t);
    x = if p < 0.5 { -x } else { x };
    for _ in 0..3 {
        let e = if x < 0.0 {
            cdf(x) - p
        } else {
            (1.0 - p) - sf(x)
        };
        let u = e / pdf(x);
        if !u.is_finite() {
            break;
        }
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Φ(x; mean, variance)
pub fn cdf_with(x: f64, mean: f64, variance: f64) -> f64 {
    cdf((x - mean) / variance.sqrt())
}

/// Two-sided 97.5% standard normal quantile.
pub const Z_975: f64 = 1.959_963_984_540_054;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        assert_relative_eq!(cdf(0.0), 0.5, epsilon = 1e-16);
        assert_relative_eq!(cdf(-1.0), 0.158_655_253_931_457_05, max_relative = 1e-14);
        assert_relative_eq!(cdf(2.0), 0.977_249_868_051_820_8, max_relative = 1e-14);
        // deep lower tail keeps relative precision
        assert_relative_eq!(cdf(-10.0), 7.619_853_024_160_527e-24, max_relative = 1e-12);
        assert_relative_eq!(sf(10.0), 7.619_853_024_160_527e-24, max_relative = 1e-12);
        assert_relative_eq!(pdf(0.0), INV_SQRT_2PI, max_relative = 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.025, 0.2, 0.5, 0.8, 0.975, 1.0 - 1e-9] {
            assert_relative_eq!(cdf(quantile(p)), p, max_relative = 1e-10);
        }
        assert_relative_eq!(quantile(0.975), Z_975, max_relative = 1e-12);
        assert_eq!(quantile(0.5), 0.0);
    }

    #[test]
    fn infinite_arguments() {
        assert_eq!(cdf(f64::INFINITY), 1.0);
        assert_eq!(cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(pdf(f64::INFINITY), 0.0);
    }
}

//! Normal-distribution helpers for threshold sampling.

use std::f64::consts::SQRT_2;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Inverse of [`normal_cdf`] by bisection; monotone and deterministic.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1), got {p}");
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// z-offset that places the *minimum* of `n` lognormal(median m, sigma)
/// draws at median m: the median of the minimum equals
/// `m * exp(sigma * (z - min_median_offset(n)))` evaluated at z equal to the
/// offset itself. Derived from P(min > t) = (1 - F(t))^n = 1/2.
pub fn min_median_offset(n: u64) -> f64 {
    assert!(n >= 1);
    // 1 - 2^(-1/n), kept accurate for large n via expm1.
    let p = -libm::expm1(-std::f64::consts::LN_2 / n as f64);
    normal_quantile(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-6, 0.01, 0.25, 0.5, 0.75, 0.99, 1.0 - 1e-6] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() < 1e-12, "p={p}");
        }
        assert!(normal_quantile(0.5).abs() < 1e-12);
    }

    #[test]
    fn offsets_match_precomputed_values() {
        // Frozen from an independent erfc-based computation.
        assert!((min_median_offset(8448) - -3.768714240).abs() < 1e-6);
        assert!((min_median_offset(16896) - -3.938340844).abs() < 1e-6);
        assert!((min_median_offset(1) - 0.0).abs() < 1e-12);
    }
}

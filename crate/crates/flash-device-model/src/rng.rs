//! Counter-based keyed generator.
//!
//! Every random quantity in the device model is a pure function of
//! `(chip_seed, role, cell coordinates, draw index)`. There is no stream
//! state to advance, so values are order-independent and can be recomputed
//! lazily instead of being stored. Not cryptographic; must never be used for
//! secrets.

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    x
}

/// Hash a seed and a list of key words down to one well-mixed u64.
pub fn keyed_u64(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix64(seed ^ 0x9E37_79B9_7F4A_7C15);
    for &w in words {
        h = mix64(h ^ mix64(w.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    h
}

/// Uniform draw in the open interval (0, 1).
pub fn keyed_unit(seed: u64, words: &[u64]) -> f64 {
    // 53 mantissa bits, offset by half an ulp so 0.0 is unreachable.
    (keyed_u64(seed, words) >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
        + (1.0 / 18_014_398_509_481_984.0)
}

/// Standard normal draw via Box-Muller on two keyed uniforms.
pub fn keyed_normal(seed: u64, words: &[u64]) -> f64 {
    let mut w1 = Vec::with_capacity(words.len() + 1);
    w1.extend_from_slice(words);
    w1.push(0);
    let u1 = keyed_unit(seed, &w1);
    *w1.last_mut().expect("non-empty") = 1;
    let u2 = keyed_unit(seed, &w1);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * std::f64::consts::PI * u2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_draws_are_pure_functions() {
        assert_eq!(keyed_u64(7, &[1, 2, 3]), keyed_u64(7, &[1, 2, 3]));
        assert_ne!(keyed_u64(7, &[1, 2, 3]), keyed_u64(8, &[1, 2, 3]));
        assert_ne!(keyed_u64(7, &[1, 2, 3]), keyed_u64(7, &[1, 3, 2]));
    }

    #[test]
    fn unit_draws_stay_in_open_interval() {
        for i in 0..10_000u64 {
            let u = keyed_unit(42, &[i]);
            assert!(u > 0.0 && u < 1.0, "draw {i} out of range: {u}");
        }
    }

    #[test]
    fn normal_draws_have_plausible_moments() {
        let n = 50_000u64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in 0..n {
            let z = keyed_normal(99, &[i]);
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
    }
}

//! Small numeric helpers shared across modules.

/// log(sum_i exp(x_i)) computed against the running maximum.
///
/// Returns `f64::NEG_INFINITY` for an empty slice or all-`-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// log(exp(a) + exp(b)) for two terms.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if !hi.is_finite() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// SplitMix64 step; the standard finalizer used to derive seed streams.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix an arbitrary sequence of words into one deterministic 64-bit seed.
///
/// Used to derive independent RNG streams per (master seed, node,
/// parent-set, ...) so parallel score computations are reproducible
/// regardless of scheduling.
pub fn mix_seed(words: &[u64]) -> u64 {
    let mut state = 0x6a09_e667_f3bc_c909u64;
    let mut acc = 0u64;
    for &w in words {
        state ^= w;
        acc ^= splitmix64(&mut state);
    }
    // one extra scramble so trailing zeros still diffuse
    state ^= acc;
    splitmix64(&mut state)
}

/// Deterministic fingerprint of a slice of f64 (bit patterns).
pub fn hash_f64_slice(data: &[f64]) -> u64 {
    let mut state = 0x243f_6a88_85a3_08d3u64;
    let mut acc = data.len() as u64;
    for &x in data {
        state ^= x.to_bits();
        acc = acc.rotate_left(7) ^ splitmix64(&mut state);
    }
    state ^= acc;
    splitmix64(&mut state)
}

/// Sample mean and (N-1) standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n > 0, "mean_sd of empty slice");
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Median of a slice (copies and sorts).
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of empty slice");
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [-1.0f64, 0.5, 2.0, -3.0];
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert_abs_diff_eq!(log_sum_exp(&xs), direct, epsilon = 1e-12);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        // values that would overflow a naive sum
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert_abs_diff_eq!(v, 1000.0 + 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn log_add_exp_agrees_with_lse() {
        assert_abs_diff_eq!(
            log_add_exp(0.3, -1.2),
            log_sum_exp(&[0.3, -1.2]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn mix_seed_is_order_sensitive_and_stable() {
        let a = mix_seed(&[1, 2, 3]);
        let b = mix_seed(&[3, 2, 1]);
        assert_ne!(a, b);
        assert_eq!(a, mix_seed(&[1, 2, 3]));
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}

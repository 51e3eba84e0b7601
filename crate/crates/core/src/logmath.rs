//! Log-domain arithmetic helpers.

/// Stand-in for `log(0)`. Adding any finite log-likelihood to it leaves it unchanged
/// and `exp` of it underflows to exactly zero.
pub const LOG_ZERO: f64 = -1e300;

/// Entries at or below this level are treated as `log(0)`.
const LOG_ZERO_FLOOR: f64 = -1e299;

/// `log(exp(a) + exp(b))` without overflow.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi <= LOG_ZERO_FLOOR {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum(exp(v)))` over a slice. Returns [`LOG_ZERO`] for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max <= LOG_ZERO_FLOOR {
        return if values.is_empty() { LOG_ZERO } else { max.max(LOG_ZERO) };
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct_sum() {
        let (a, b) = (-1.3_f64, 0.7_f64);
        let direct = (a.exp() + b.exp()).ln();
        assert!((log_add(a, b) - direct).abs() < 1e-15);
        assert!((log_add(b, a) - direct).abs() < 1e-15);
    }

    #[test]
    fn large_magnitudes_do_not_overflow() {
        assert!((log_add(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_sum_exp(&[-1000.0, -1000.0, -1000.0]) - (-1000.0 + 3f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn sentinel_is_absorbing() {
        assert_eq!(log_add(LOG_ZERO, LOG_ZERO), LOG_ZERO);
        assert_eq!(log_add(LOG_ZERO, -3.0), -3.0);
        assert_eq!(log_sum_exp(&[LOG_ZERO, LOG_ZERO]), LOG_ZERO);
        assert_eq!(log_sum_exp(&[]), LOG_ZERO);
        assert_eq!(log_sum_exp(&[LOG_ZERO, 0.0]), 0.0);
    }
}

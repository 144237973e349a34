//! Scalar helpers shared by the filter and estimators.

use core::f64::consts::PI;

/// `log(sum(exp(x)))` with max shifting, summed in index order.
///
/// Returns `-inf` when every entry is `-inf` (or the slice is empty).
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut acc = 0.0;
    for &x in xs {
        acc += libm::exp(x - max);
    }
    max + libm::log(acc)
}

/// Log-density of `N(mean, sigma²)` at `x`.
#[inline]
pub(crate) fn gaussian_log_pdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let r = x - mean;
    -0.5 * libm::log(2.0 * PI * sigma * sigma) - r * r / (2.0 * sigma * sigma)
}

/// Divides by the sum in place; returns the sum before scaling.
pub(crate) fn normalize(probs: &mut [f64]) -> f64 {
    let total: f64 = probs.iter().sum();
    if total > 0.0 && total.is_finite() {
        let inv = 1.0 / total;
        for p in probs.iter_mut() {
            *p *= inv;
        }
    }
    total
}

/// Sum by recursive halving. A power-of-two count of equal terms sums
/// without rounding.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_of_equal_terms_is_exact() {
        let x = 0.1f64.ln() / 3.0;
        for k in 0..14 {
            let n = 1usize << k;
            assert_eq!(pairwise_sum(&alloc::vec![x; n]), x * n as f64);
        }
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.5]), 6.5);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn lse_matches_naive_on_moderate_values() {
        let xs = [-1.0, 0.5, 2.0];
        let naive = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-14);
    }

    #[test]
    fn lse_survives_huge_negative_offsets() {
        let xs = [-1.0e4, -1.0e4 - 1.0];
        let expected = -1.0e4 + (1.0 + (-1.0f64).exp()).ln();
        assert!((log_sum_exp(&xs) - expected).abs() < 1e-9);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}

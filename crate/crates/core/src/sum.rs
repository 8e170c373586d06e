//! Pairwise summation.
//!
//! All reductions in the crate go through these helpers so that the summation
//! tree depends only on the length of the input, never on thread scheduling.

use num_complex::Complex64;

const BLOCK: usize = 32;

/// Pairwise sum of `term(i)` for `i in 0..len`.
pub fn pairwise_by<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64,
{
    fn go<F: Fn(usize) -> f64>(lo: usize, hi: usize, term: &F) -> f64 {
        if hi - lo <= BLOCK {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += term(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, term) + go(mid, hi, term)
        }
    }
    go(0, len, &term)
}

/// Complex counterpart of [`pairwise_by`].
pub fn pairwise_complex_by<F>(len: usize, term: F) -> Complex64
where
    F: Fn(usize) -> Complex64,
{
    fn go<F: Fn(usize) -> Complex64>(lo: usize, hi: usize, term: &F) -> Complex64 {
        if hi - lo <= BLOCK {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in lo..hi {
                acc += term(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, term) + go(mid, hi, term)
        }
    }
    go(0, len, &term)
}

pub fn pairwise(values: &[f64]) -> f64 {
    pairwise_by(values.len(), |i| values[i])
}

pub fn pairwise_complex(values: &[Complex64]) -> Complex64 {
    pairwise_complex_by(values.len(), |i| values[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sums_are_zero() {
        assert_eq!(pairwise(&[]), 0.0);
        assert_eq!(pairwise_complex(&[]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn matches_exact_integer_sum() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise(&v), 500_500.0);
    }

    #[test]
    fn beats_naive_accumulation_on_many_small_terms() {
        let n = 1 << 20;
        let naive: f64 = (0..n).map(|_| 0.1).sum();
        let paired = pairwise_by(n, |_| 0.1);
        let exact = 0.1 * n as f64;
        assert!((paired - exact).abs() <= (naive - exact).abs());
        assert!((paired - exact).abs() / exact < 1e-14);
    }
}

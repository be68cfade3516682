//! Floating-point abstraction shared by every numerical module.
//!
//! All model math is written once against [`Real`] and instantiated for
//! `f64` (the default everywhere in the pipeline) and `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// A real scalar usable by the estimation code.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot
    /// represent finite `f64` values at all, which no supported type does.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {}
impl Real for f32 {}

/// Below this length the pairwise reductions fall back to a sequential loop.
const PAIRWISE_LEAF: usize = 8;

/// Pairwise (tree) summation. The split points depend only on the slice
/// length, so the result is deterministic for a given input.
pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    if values.len() <= PAIRWISE_LEAF {
        return values.iter().fold(T::zero(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise reduction of per-row vector contributions.
///
/// `row` adds the contribution of row `i` into the accumulator it is given.
/// The recursion splits `[0, n)` at fixed midpoints, matching
/// [`pairwise_sum`].
pub fn pairwise_vec_sum<T, F>(n: usize, dim: usize, row: &F) -> Vec<T>
where
    T: Real,
    F: Fn(usize, &mut [T]),
{
    fn go<T: Real, F: Fn(usize, &mut [T])>(lo: usize, hi: usize, dim: usize, row: &F) -> Vec<T> {
        if hi - lo <= PAIRWISE_LEAF {
            let mut acc = vec![T::zero(); dim];
            for i in lo..hi {
                row(i, &mut acc);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        let mut left = go(lo, mid, dim, row);
        let right = go(mid, hi, dim, row);
        for (l, r) in left.iter_mut().zip(right) {
            *l = *l + r;
        }
        left
    }
    go(0, n, dim, row)
}

/// `ln(Σ exp(v_i))` with max-shift.
pub fn log_sum_exp<T: Real>(values: &[T]) -> T {
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    let sum: T = values.iter().map(|&v| (v - max).exp()).fold(T::zero(), |a, b| a + b);
    max + sum.ln()
}

/// Standard logistic function, evaluated without overflow for any finite input.
#[inline]
pub fn logistic<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `ln σ(z)`, accurate in both tails.
#[inline]
pub fn log_logistic<T: Real>(z: T) -> T {
    if z >= T::zero() {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        let s = pairwise_vec_sum::<f64, _>(1000, 2, &|i, acc: &mut [f64]| {
            acc[0] += v[i];
            acc[1] += 1.0;
        });
        assert_eq!(s, vec![500_500.0, 1000.0]);
    }

    #[test]
    fn logistic_tails() {
        assert_eq!(logistic(0.0_f64), 0.5);
        assert!(logistic(800.0_f64) == 1.0);
        assert!(logistic(-800.0_f64) >= 0.0);
        assert!((log_logistic(-800.0_f64) + 800.0).abs() < 1e-9);
        assert!(log_logistic(800.0_f64) <= 0.0);
        assert!((log_logistic(2.0_f64) - logistic(2.0_f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn lse_is_shift_stable() {
        let v = [1000.0_f64, 1000.0, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 3.0_f64.ln())).abs() < 1e-12);
        assert!((log_sum_exp(&[1.0_f32, 2.0]) - (1.0_f32.exp() + 2.0_f32.exp()).ln()).abs() < 1e-5);
    }
}

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldStat<T> {
    pub value: T,
    pub se: T,
    pub t: T,
    pub p: T,
    /// Set when the standard error is zero.
    pub flagged: bool,
}

/// Two-sided normal p-value, `2(1 − Φ(|t|)) = erfc(|t|/√2)`.
pub fn normal_two_sided_p<T: Real>(t: T) -> T {
    if t.is_nan() {
        return T::nan();
    }
    T::lit(erfc(t.abs().to_f64_lossy() / std::f64::consts::SQRT_2))
}

pub fn wald_stats<T: Real>(params: &[T], covariance: &Matrix<T>) -> Result<Vec<WaldStat<T>>> {
    if covariance.rows() != params.len() || covariance.cols() != params.len() {
        return Err(Error::InvalidInput(format!(
            "covariance is {}x{} for {} parameters",
            covariance.rows(),
            covariance.cols(),
            params.len()
        )));
    }
    params
        .iter()
        .zip(covariance.diagonal())
        .map(|(&value, var)| {
            if var < T::zero() || var.is_nan() {
                return Err(Error::InvalidInput(format!("negative variance {var} on the covariance diagonal")));
            }
            let se = var.sqrt();
            if se == T::zero() {
                let t = if value == T::zero() { T::zero() } else { value.signum() * T::infinity() };
                let p = if value == T::zero() { T::one() } else { T::zero() };
                return Ok(WaldStat { value, se, t, p, flagged: true });
            }
            let t = value / se;
            Ok(WaldStat { value, se, t, p: normal_two_sided_p(t), flagged: false })
        })
        .collect()
}

/// McFadden's `1 − LL / LL₀`.
pub fn ll_ratio<T: Real>(ll: T, ll_null: T) -> Result<T> {
    if !(ll_null < T::zero()) {
        return Err(Error::InvalidInput(format!("null log-likelihood must be negative, got {ll_null}")));
    }
    if ll < ll_null {
        return Err(Error::BelowNull { ll: ll.to_f64_lossy(), ll_null: ll_null.to_f64_lossy() });
    }
    Ok(T::one() - ll / ll_null)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> Matrix<f64> {
        let mut m = Matrix::zeros(v.len(), v.len());
        for (i, &x) in v.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    #[test]
    fn null_parameter() {
        let s = wald_stats(&[0.0], &diag(&[1.0])).unwrap();
        assert_eq!((s[0].t, s[0].p), (0.0, 1.0));
    }

    #[test]
    fn two_sigma_p_value() {
        let s = wald_stats(&[2.0], &diag(&[1.0])).unwrap();
        assert_eq!(s[0].t, 2.0);
        // 50-digit reference: 0.04550026389635841440056527
        assert!((s[0].p - 0.045_500_263_896_358_41).abs() < 1e-15);
    }

    #[test]
    fn t_is_value_over_se() {
        let s = wald_stats(&[-9.86], &diag(&[2.12 * 2.12])).unwrap();
        // reference quotient −4.650943396226415094...
        assert!((s[0].t - -4.650_943_396_226_415).abs() < 1e-12);
        assert!((s[0].se - 2.12).abs() < 1e-15);
    }

    #[test]
    fn zero_se_is_flagged() {
        let s = wald_stats(&[-3.0, 0.0], &diag(&[0.0, 0.0])).unwrap();
        assert!(s[0].flagged && s[0].t == f64::NEG_INFINITY && s[0].p == 0.0);
        assert!(s[1].flagged && s[1].p == 1.0);
        assert!(wald_stats(&[1.0], &diag(&[-1.0])).is_err());
    }

    #[test]
    fn ratio_bounds() {
        assert_eq!(ll_ratio(-10.0, -10.0).unwrap(), 0.0);
        assert!((ll_ratio(-1e-12f64, -10.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(ll_ratio(-11.0, -10.0), Err(Error::BelowNull { .. })));
        assert!(ll_ratio(-1.0, 0.0).is_err());
    }
}

//! Hessian by differentiating the analytic score, and the Huber-White
//! sandwich `H⁻¹ B H⁻¹`.

use super::likelihood::Likelihood;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Relative step for the central difference of the score.
const HESSIAN_STEP: f64 = 1e-5;
/// Eigenvalue ratio below which the information matrix is treated as singular.
const SINGULAR_RATIO: f64 = 1e-10;

/// Negative Hessian of the log-likelihood (the observed information),
/// symmetrized.
pub fn observed_information<T: Real, L: Likelihood<T> + ?Sized>(model: &L, theta: &[T]) -> Result<Matrix<T>> {
    let p = theta.len();
    let mut h = Matrix::zeros(p, p);
    let mut work = theta.to_vec();
    for j in 0..p {
        let step = T::lit(HESSIAN_STEP) * theta[j].abs().max(T::one());
        work[j] = theta[j] + step;
        let up = model.score(&work)?;
        work[j] = theta[j] - step;
        let down = model.score(&work)?;
        work[j] = theta[j];
        for i in 0..p {
            h[(i, j)] = -(up[i] - down[i]) / (step + step);
        }
    }
    Ok(h.symmetrize())
}

/// Outer-product-of-scores matrix `B = Σ sₙ sₙᵀ`.
pub fn score_outer_product<T: Real, L: Likelihood<T> + ?Sized>(model: &L, theta: &[T]) -> Result<Matrix<T>> {
    let p = theta.len();
    let mut b = Matrix::zeros(p, p);
    for s in model.row_scores(theta)? {
        for i in 0..p {
            if s[i] == T::zero() {
                continue;
            }
            for j in 0..p {
                b[(i, j)] = b[(i, j)] + s[i] * s[j];
            }
        }
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Covariances<T> {
    /// Sandwich estimate `H⁻¹ B H⁻¹`.
    pub robust: Matrix<T>,
    /// Inverse observed information `H⁻¹`.
    pub classical: Matrix<T>,
    pub information: Matrix<T>,
}

/// Inverse of a symmetric positive-definite information matrix, or an error
/// naming the weakest direction.
pub fn invert_information<T: Real>(information: &Matrix<T>, names: &[String]) -> Result<Matrix<T>> {
    let (values, vectors) = information.symmetric_eigen();
    let largest = values.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let smallest = values[0];
    if !(smallest > T::lit(SINGULAR_RATIO) * largest) {
        let mut direction: Vec<(String, f64)> = (0..information.rows())
            .map(|i| (names.get(i).cloned().unwrap_or_else(|| format!("param_{i}")), vectors[(i, 0)].to_f64_lossy()))
            .filter(|(_, w)| w.abs() > 0.1)
            .collect();
        direction.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap_or(std::cmp::Ordering::Equal));
        return Err(Error::Singular { direction });
    }
    information.inverse().ok_or_else(|| Error::Singular { direction: vec![] })
}

pub fn sandwich_covariance<T: Real, L: Likelihood<T> + ?Sized>(model: &L, theta: &[T]) -> Result<Covariances<T>> {
    let information = observed_information(model, theta)?;
    let classical = invert_information(&information, &model.param_names())?.symmetrize();
    let meat = score_outer_product(model, theta)?;
    let robust = classical.matmul(&meat).matmul(&classical).symmetrize();
    Ok(Covariances { robust, classical, information })
}

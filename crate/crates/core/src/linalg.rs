//! Symmetric eigen-decomposition by cyclic Jacobi rotations and a Cholesky
//! wrapper for quadratic forms.

use crate::error::{CoreError, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Eigenpairs of a symmetric matrix, eigenvalues sorted nonincreasing and
/// eigenvectors stored as the matching columns. Ties keep their original
/// diagonal order.
pub fn jacobi_eigen(sym: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = sym.nrows();
    let mut a = sym.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
}

impl SpdFactor {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        Cholesky::new(m.clone())
            .map(|chol| SpdFactor { chol })
            .ok_or_else(|| CoreError::InvalidParameter("matrix is not positive definite".into()))
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    /// `M⁻¹ v`.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        self.chol.solve(&DVector::from_column_slice(v)).as_slice().to_vec()
    }

    /// `vᵀ M⁻¹ v`, computed as `‖L⁻¹ v‖²`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut z = DVector::from_column_slice(v);
        self.chol.l_dirty().solve_lower_triangular_mut(&mut z);
        z.norm_squared()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonalizes_known_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let (vals, vecs) = jacobi_eigen(&m);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let recon = &vecs * DMatrix::from_diagonal(&DVector::from_vec(vals.clone())) * vecs.transpose();
        assert!((recon - &m).abs().max() < 1e-12);
        assert!((vals.iter().sum::<f64>() - 9.0).abs() < 1e-12);
        let gram = vecs.transpose() * &vecs;
        assert!((gram - DMatrix::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn quad_form_matches_explicit_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let f = SpdFactor::new(&m).unwrap();
        let v = [1.0, -2.0];
        let inv = m.try_inverse().unwrap();
        let vv = DVector::from_column_slice(&v);
        let expect = (vv.transpose() * inv * &vv)[(0, 0)];
        assert!((f.quad_form(&v) - expect).abs() < 1e-12);
        let s = f.solve(&v);
        assert!((s[0] * 2.0 + s[1] * 0.5 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(SpdFactor::new(&m).is_err());
    }
}

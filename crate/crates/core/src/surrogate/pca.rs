use crate::error::{CoreError, Result};
use crate::linalg::jacobi_eigen;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Leading principal directions of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Unit-norm, mutually orthogonal row vectors, by decreasing variance.
    pub components: Vec<Vec<f64>>,
    /// Sample variance along each component.
    pub variances: Vec<f64>,
}

/// Eigen-decomposes the sample covariance (divisor `N − 1`) and keeps the
/// `n_components` leading directions.
pub fn fit_pca(samples: &[Vec<f64>], n_components: usize) -> Result<PcaModel> {
    let n = samples.len();
    let dim = samples.first().map_or(0, Vec::len);
    if n < 2 || n_components == 0 || n_components > (n - 1).min(dim) {
        return Err(CoreError::InvalidParameter(format!(
            "{n_components} components need 1 ≤ N_P ≤ min(samples − 1, dim) = {}",
            n.saturating_sub(1).min(dim)
        )));
    }
    if samples.iter().any(|s| s.len() != dim) {
        return Err(CoreError::Dimension("samples differ in length".into()));
    }
    let mut mean = vec![0.0; dim];
    for s in samples {
        mean.iter_mut().zip(s).for_each(|(m, v)| *m += v / n as f64);
    }
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for s in samples {
        for i in 0..dim {
            let di = s[i] - mean[i];
            for j in i..dim {
                cov[(i, j)] += di * (s[j] - mean[j]) / (n - 1) as f64;
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            cov[(i, j)] = cov[(j, i)];
        }
    }
    let (vals, vecs) = jacobi_eigen(&cov);
    let components = (0..n_components)
        .map(|k| {
            let mut c: Vec<f64> = vecs.column(k).iter().copied().collect();
            // fix the sign so the largest entry is positive
            let big = c.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            if big < 0.0 {
                c.iter_mut().for_each(|x| *x = -*x);
            }
            let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            c.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    Ok(PcaModel {
        mean,
        components,
        variances: vals[..n_components].to_vec(),
    })
}

impl PcaModel {
    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `d_j = P_j·(x − mean)`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|p| p.iter().zip(x.iter().zip(&self.mean)).map(|(a, (v, m))| a * (v - m)).sum())
            .collect()
    }

    pub fn reconstruct(&self, d: &[f64]) -> Vec<f64> {
        let mut x = self.mean.clone();
        for (p, dj) in self.components.iter().zip(d) {
            x.iter_mut().zip(p).for_each(|(xi, pi)| *xi += dj * pi);
        }
        x
    }
}

use crate::error::{CoreError, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Weights may leave the simplex by this much before they are rejected.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Predictions of every forecasting method for one day, flattened
/// bus-major, with the realized net load when it is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastBundle {
    pub methods: Vec<Vec<f64>>,
    pub truth: Option<Vec<f64>>,
}

impl ForecastBundle {
    pub fn new(methods: Vec<Vec<f64>>, truth: Option<Vec<f64>>) -> Result<Self> {
        let dim = methods.first().map(Vec::len).ok_or_else(|| CoreError::Dimension("bundle has no methods".into()))?;
        if methods.iter().any(|m| m.len() != dim) || truth.as_ref().is_some_and(|t| t.len() != dim) {
            return Err(CoreError::Dimension("bundle members differ in length".into()));
        }
        Ok(ForecastBundle { methods, truth })
    }

    pub fn num_methods(&self) -> usize {
        self.methods.len()
    }

    pub fn dim(&self) -> usize {
        self.methods[0].len()
    }

    /// `U − Û(w)`, when the truth is known.
    pub fn errors(&self, w: &WeightVector) -> Result<Option<Vec<f64>>> {
        let pred = combine_forecasts(self, w)?;
        Ok(self.truth.as_ref().map(|t| t.iter().zip(&pred).map(|(a, b)| a - b).collect()))
    }
}

/// Nonnegative weights summing to one, one per forecasting method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if w.is_empty() || w.iter().any(|v| !v.is_finite() || *v < -SIMPLEX_TOL) || (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(CoreError::InvalidParameter(format!("weights {w:?} are not on the simplex")));
        }
        Ok(WeightVector(w))
    }

    pub fn vertex(methods: usize, k: usize) -> Self {
        let mut w = vec![0.0; methods];
        w[k] = 1.0;
        WeightVector(w)
    }

    pub fn uniform(methods: usize) -> Self {
        WeightVector(vec![1.0 / methods as f64; methods])
    }

    /// From the first `M − 1` components; the last is the remainder.
    pub fn from_free(free: &[f64]) -> Result<Self> {
        let mut w = free.to_vec();
        w.push(1.0 - free.iter().sum::<f64>());
        Self::new(w)
    }

    /// The first `M − 1` components, which determine the rest.
    pub fn free(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `Σ_m w_m Û^(m)`.
pub fn combine_forecasts(bundle: &ForecastBundle, w: &WeightVector) -> Result<Vec<f64>> {
    if w.len() != bundle.num_methods() {
        return Err(CoreError::Dimension(format!("{} weights for {} methods", w.len(), bundle.num_methods())));
    }
    let mut out = vec![0.0; bundle.dim()];
    for (m, pred) in bundle.methods.iter().enumerate() {
        for (o, p) in out.iter_mut().zip(pred) {
            *o += w.0[m] * p;
        }
    }
    Ok(out)
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let (mut cum, mut tau) = (0.0, 0.0);
    for (k, &x) in s.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|x| (x - tau).max(0.0)).collect();
    // absorb rounding so the sum is one to machine precision
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
    w
}

/// The simplex weight minimizing the summed squared error of the combined
/// prediction over `days`, found by solving the equality-constrained least
/// squares problem on every support and keeping the best nonnegative one.
pub fn mse_weight(days: &[ForecastBundle]) -> Result<WeightVector> {
    let first = days.first().ok_or_else(|| CoreError::NotEnoughData("no days to fit weights on".into()))?;
    let m = first.num_methods();
    if m > 12 {
        return Err(CoreError::InvalidParameter(format!("support enumeration over {m} methods is too large")));
    }
    // normal equations G w = h with G_ab = Σ Û_a·Û_b, h_a = Σ Û_a·U
    let mut g = DMatrix::<f64>::zeros(m, m);
    let mut h = DVector::<f64>::zeros(m);
    for day in days {
        let truth = day.truth.as_ref().ok_or_else(|| CoreError::NotEnoughData("day without realized load".into()))?;
        for a in 0..m {
            h[a] += day.methods[a].iter().zip(truth).map(|(p, t)| p * t).sum::<f64>();
            for b in 0..m {
                g[(a, b)] += day.methods[a].iter().zip(&day.methods[b]).map(|(p, q)| p * q).sum::<f64>();
            }
        }
    }
    let objective = |w: &[f64]| -> f64 {
        let mut v = 0.0;
        for a in 0..m {
            v -= 2.0 * w[a] * h[a];
            for b in 0..m {
                v += w[a] * g[(a, b)] * w[b];
            }
        }
        v
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1usize..(1 << m) {
        let support: Vec<usize> = (0..m).filter(|k| mask >> k & 1 == 1).collect();
        let k = support.len();
        // KKT system [G_SS 1; 1ᵀ 0] [w; ν] = [h_S; 1]
        let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut rhs = DVector::<f64>::zeros(k + 1);
        for (i, &a) in support.iter().enumerate() {
            for (j, &b) in support.iter().enumerate() {
                kkt[(i, j)] = g[(a, b)];
            }
            kkt[(i, k)] = 1.0;
            kkt[(k, i)] = 1.0;
            rhs[i] = h[a];
        }
        rhs[k] = 1.0;
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        if (0..k).any(|i| sol[i] < -1e-12 || !sol[i].is_finite()) {
            continue;
        }
        let mut w = vec![0.0; m];
        for (i, &a) in support.iter().enumerate() {
            w[a] = sol[i].max(0.0);
        }
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= sum);
        let val = objective(&w);
        if best.as_ref().is_none_or(|(b, _)| val < *b - 1e-12 * b.abs().max(1.0)) {
            best = Some((val, w));
        }
    }
    let (_, w) = best.ok_or_else(|| CoreError::InvalidParameter("no support gives a valid least-squares weight".into()))?;
    WeightVector::new(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_lands_on_simplex() {
        for v in [vec![0.2, 0.3, 0.5], vec![2.0, -1.0, 0.0], vec![-5.0, -5.0, -4.0], vec![0.4, 0.4, 0.4]] {
            let w = project_simplex(&v);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|x| *x >= 0.0));
        }
        assert_eq!(project_simplex(&[0.2, 0.3, 0.5]), vec![0.2, 0.3, 0.5]);
        assert_eq!(project_simplex(&[2.0, -1.0, 0.0]), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn mse_weight_recovers_exact_mixture() {
        let days: Vec<ForecastBundle> = (0..10)
            .map(|d| {
                let a: Vec<f64> = (0..4).map(|k| (d * 4 + k) as f64).collect();
                let b: Vec<f64> = (0..4).map(|k| ((d + k) % 5) as f64 * 3.0).collect();
                let c: Vec<f64> = (0..4).map(|k| ((d * k) % 7) as f64).collect();
                let truth = (0..4).map(|k| 0.2 * a[k] + 0.5 * b[k] + 0.3 * c[k]).collect();
                ForecastBundle::new(vec![a, b, c], Some(truth)).unwrap()
            })
            .collect();
        let w = mse_weight(&days).unwrap();
        for (got, want) in w.0.iter().zip([0.2, 0.5, 0.3]) {
            assert!((got - want).abs() < 1e-9, "{w:?}");
        }
    }
}

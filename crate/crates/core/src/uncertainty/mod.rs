//! Uncertainty sets for net load and the order statistics that size them.
//!
//! The calibrated ellipsoid takes its shape (mean, covariance) from one group
//! of forecast errors and its radius from an order statistic of Mahalanobis
//! distances on a second, disjoint group. The cost-level set replaces the
//! ellipsoid by the region where a fixed schedule's re-dispatch cost stays
//! below an order statistic of costs on held-out errors.

mod calibration;
mod dataset;
mod sets;

pub use calibration::{ceil_fraction_index, kth_smallest, minimal_calibration_size, quantile_order_index};
pub use dataset::{ErrorDataset, ErrorSplit, ProfileTable};
pub use sets::{coverage, BoxSet, CostLevelSet, EllipsoidCapSet, UncertaintySet, MEMBERSHIP_TOL};

use crate::error::{CoreError, Result};
use crate::linalg::{jacobi_eigen, SpdFactor};
use crate::system::{recourse_value, CommitmentSchedule, CompactTwoStage, PowerSystem};
use nalgebra::DMatrix;

/// Sample mean and unbiased covariance, with the ridge that was added to
/// keep the covariance invertible (0 when none was needed).
#[derive(Debug, Clone)]
pub struct SampleMoments {
    pub mean: Vec<f64>,
    pub cov: DMatrix<f64>,
    pub ridge: f64,
}

pub fn sample_moments(samples: &[Vec<f64>]) -> Result<SampleMoments> {
    let n = samples.len();
    if n < 2 {
        return Err(CoreError::NotEnoughData(format!("covariance needs at least 2 samples, got {n}")));
    }
    let dim = samples[0].len();
    if samples.iter().any(|s| s.len() != dim) {
        return Err(CoreError::Dimension("samples differ in length".into()));
    }
    let mut mean = vec![0.0; dim];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for s in samples {
        let d: Vec<f64> = s.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..dim {
            for j in i..dim {
                cov[(i, j)] += d[i] * d[j];
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            cov[(i, j)] /= (n - 1) as f64;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    let trace_mean = cov.trace() / dim as f64;
    let (vals, _) = jacobi_eigen(&cov);
    let smallest = vals.last().copied().unwrap_or(0.0);
    let mut ridge = 0.0;
    if smallest < 1e-8 * trace_mean || trace_mean <= 0.0 {
        // identical samples leave no scale at all; use an absolute ridge
        ridge = if trace_mean > 0.0 { 1e-6 * trace_mean } else { 1e-6 };
        for i in 0..dim {
            cov[(i, i)] += ridge;
        }
    }
    Ok(SampleMoments { mean, cov, ridge })
}

/// Squared Mahalanobis distances `(e − μ)ᵀ Σ⁻¹ (e − μ)`.
pub fn mahalanobis(moments: &SampleMoments, samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    let f = SpdFactor::new(&moments.cov)?;
    Ok(samples
        .iter()
        .map(|e| {
            let d: Vec<f64> = e.iter().zip(&moments.mean).map(|(a, b)| a - b).collect();
            f.quad_form(&d)
        })
        .collect())
}

fn shifted_center(forecast: &[f64], moments: &SampleMoments) -> Result<Vec<f64>> {
    if forecast.len() != moments.mean.len() {
        return Err(CoreError::Dimension(format!(
            "forecast has {} entries, errors have {}",
            forecast.len(),
            moments.mean.len()
        )));
    }
    Ok(forecast.iter().zip(&moments.mean).map(|(u, m)| u + m).collect())
}

/// Ellipsoid with statistical guarantee: shape from `shape_errors`, radius
/// the `n*`-th smallest distance over `size_errors`.
pub fn build_ellipsoid_set(forecast: &[f64], shape_errors: &[Vec<f64>], size_errors: &[Vec<f64>], eps: f64, delta: f64, bounds: BoxSet) -> Result<EllipsoidCapSet> {
    let moments = sample_moments(shape_errors)?;
    let dist = mahalanobis(&moments, size_errors)?;
    let k = quantile_order_index(dist.len(), eps, delta)?;
    let alpha = kth_smallest(&dist, k);
    EllipsoidCapSet::new(bounds, shifted_center(forecast, &moments)?, moments.cov, alpha)
}

/// How the radius of an uncalibrated ellipsoid is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EllipsoidMode {
    /// Enclose every sample.
    All,
    /// Enclose the `⌈(1 − ε) N⌉` closest samples.
    Fraction { eps: f64 },
}

/// Ellipsoid with shape and radius taken from the same samples.
pub fn build_ellipsoid_variant(forecast: &[f64], errors: &[Vec<f64>], mode: EllipsoidMode, bounds: BoxSet) -> Result<EllipsoidCapSet> {
    let moments = sample_moments(errors)?;
    let dist = mahalanobis(&moments, errors)?;
    let k = match mode {
        EllipsoidMode::All => dist.len(),
        EllipsoidMode::Fraction { eps } => ceil_fraction_index(dist.len(), eps),
    };
    let alpha = kth_smallest(&dist, k);
    EllipsoidCapSet::new(bounds, shifted_center(forecast, &moments)?, moments.cov, alpha)
}

/// A reconstructed set together with the costs its level came from.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub set: CostLevelSet,
    /// Re-dispatch cost of the anchor at each held-out realization (`+∞`
    /// when infeasible), in sample order.
    pub costs: Vec<f64>,
    pub order_index: usize,
}

/// Level `β` = the `n*`-th smallest re-dispatch cost of `anchor` over
/// `forecast + e` for the held-out errors.
pub fn reconstruct_set(
    sys: &PowerSystem,
    anchor: &CommitmentSchedule,
    forecast: &[f64],
    errors: &[Vec<f64>],
    eps: f64,
    delta: f64,
    bounds: BoxSet,
) -> Result<Reconstruction> {
    sys.check_load(forecast)?;
    let k = quantile_order_index(errors.len(), eps, delta)?;
    let costs: Vec<f64> = errors
        .iter()
        .map(|e| {
            let u: Vec<f64> = forecast.iter().zip(e).map(|(a, b)| a + b).collect();
            recourse_value(sys, anchor, &u).map_or(f64::INFINITY, |(v, _)| v)
        })
        .collect();
    let beta = kth_smallest(&costs, k);
    Ok(Reconstruction {
        set: CostLevelSet {
            bounds,
            anchor: anchor.clone(),
            beta,
            compact: CompactTwoStage::build(sys),
        },
        costs,
        order_index: k,
    })
}

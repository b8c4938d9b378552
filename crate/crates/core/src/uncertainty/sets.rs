use crate::error::{CoreError, Result};
use crate::linalg::SpdFactor;
use crate::system::{CommitmentSchedule, CompactTwoStage};
use nalgebra::DMatrix;
use ruc_milp::{solve_lp, Status};
use serde::{Deserialize, Serialize};

/// Absolute slack allowed when testing box bounds and ellipsoid radii.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// All net-load realizations the facilities can physically produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(CoreError::Dimension("box bounds differ in length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(CoreError::InvalidParameter("box lower bound exceeds upper bound".into()));
        }
        Ok(BoxSet { lower, upper })
    }

    /// The degenerate set holding one realization.
    pub fn singleton(point: &[f64]) -> Self {
        BoxSet {
            lower: point.to_vec(),
            upper: point.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, h))| *v >= l - MEMBERSHIP_TOL && *v <= h + MEMBERSHIP_TOL)
    }

    pub fn clamp(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    }

    pub fn intersect(&self, other: &BoxSet) -> BoxSet {
        let lower: Vec<f64> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper = self.upper.iter().zip(&other.upper).zip(&lower).map(|((a, b), l)| a.min(*b).max(*l)).collect();
        BoxSet { lower, upper }
    }

    /// Every corner of the box; only sensible in a handful of dimensions.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        assert!(n <= 20, "too many box vertices to enumerate");
        (0..1usize << n)
            .map(|mask| (0..n).map(|k| if mask >> k & 1 == 1 { self.upper[k] } else { self.lower[k] }).collect())
            .collect()
    }
}

/// `{u ∈ box : (u − c)ᵀ Σ⁻¹ (u − c) ≤ α}`.
#[derive(Debug, Clone)]
pub struct EllipsoidCapSet {
    pub bounds: BoxSet,
    pub center: Vec<f64>,
    pub cov: DMatrix<f64>,
    pub alpha: f64,
    factor: SpdFactor,
}

impl EllipsoidCapSet {
    pub fn new(bounds: BoxSet, center: Vec<f64>, cov: DMatrix<f64>, alpha: f64) -> Result<Self> {
        if center.len() != bounds.dim() || cov.nrows() != center.len() || cov.ncols() != center.len() {
            return Err(CoreError::Dimension("ellipsoid center, covariance and box disagree".into()));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(CoreError::InvalidParameter(format!("radius {alpha} must be finite and nonnegative")));
        }
        let factor = SpdFactor::new(&cov)?;
        Ok(EllipsoidCapSet {
            bounds,
            center,
            cov,
            alpha,
            factor,
        })
    }

    /// Squared Mahalanobis distance of `u` from the center.
    pub fn radius_of(&self, u: &[f64]) -> f64 {
        let d: Vec<f64> = u.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        self.factor.quad_form(&d)
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        self.bounds.contains(u) && self.radius_of(u) <= self.alpha + MEMBERSHIP_TOL
    }

    /// Axis-aligned box enclosing the ellipsoid, clipped to the bounds:
    /// `c_i ± sqrt(α Σ_ii)`.
    pub fn enclosing_box(&self) -> BoxSet {
        let half: Vec<f64> = (0..self.center.len()).map(|i| (self.alpha * self.cov[(i, i)]).sqrt()).collect();
        let inner = BoxSet {
            lower: self.center.iter().zip(&half).map(|(c, h)| c - h).collect(),
            upper: self.center.iter().zip(&half).map(|(c, h)| c + h).collect(),
        };
        self.bounds.intersect(&inner)
    }
}

/// `{u ∈ box : min_y {F·y : A y ≥ B x₀ + D u + E} ≤ β}`; with `β = +∞`
/// it is the box itself.
#[derive(Debug, Clone)]
pub struct CostLevelSet {
    pub bounds: BoxSet,
    pub anchor: CommitmentSchedule,
    pub beta: f64,
    pub compact: CompactTwoStage,
}

impl CostLevelSet {
    pub fn anchor_vector(&self) -> Vec<f64> {
        self.compact.x_vector(&self.anchor)
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        if !self.bounds.contains(u) {
            return false;
        }
        if self.beta == f64::INFINITY {
            return true;
        }
        let rep = solve_lp(&self.compact.recourse_lp(&self.anchor_vector(), u));
        rep.status == Status::Optimal && rep.objective <= self.beta + 1e-7 * (1.0 + self.beta.abs())
    }
}

#[derive(Debug, Clone)]
pub enum UncertaintySet {
    Box(BoxSet),
    Ellipsoid(EllipsoidCapSet),
    CostLevel(CostLevelSet),
}

impl UncertaintySet {
    pub fn bounds(&self) -> &BoxSet {
        match self {
            UncertaintySet::Box(b) => b,
            UncertaintySet::Ellipsoid(e) => &e.bounds,
            UncertaintySet::CostLevel(c) => &c.bounds,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds().dim()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            UncertaintySet::Box(b) => b.contains(u),
            UncertaintySet::Ellipsoid(e) => e.contains(u),
            UncertaintySet::CostLevel(c) => c.contains(u),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            UncertaintySet::Box(_) => "box",
            UncertaintySet::Ellipsoid(_) => "ellipsoid",
            UncertaintySet::CostLevel(_) => "cost_level",
        }
    }
}

/// Fraction of `samples` inside `set`.
pub fn coverage(set: &UncertaintySet, samples: &[Vec<f64>]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|u| set.contains(u)).count() as f64 / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disc(alpha: f64) -> EllipsoidCapSet {
        let b = BoxSet::new(vec![-10.0; 2], vec![10.0; 2]).unwrap();
        EllipsoidCapSet::new(b, vec![1.0, 2.0], DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]), alpha).unwrap()
    }

    #[test]
    fn center_and_boundary() {
        let e = unit_disc(1.5);
        assert!(e.contains(&[1.0, 2.0]));
        // point on the boundary along the first eigen-direction, pushed out
        let d = [2.0, 0.0];
        let a = e.radius_of(&[1.0 + d[0], 2.0 + d[1]]);
        let s = ((1.5 + 1e-3) / a).sqrt();
        let out = [1.0 + s * d[0], 2.0 + s * d[1]];
        assert!((e.radius_of(&out) - 1.5 - 1e-3).abs() < 1e-12);
        assert!(!e.contains(&out));
    }

    #[test]
    fn symmetric_membership() {
        let e = unit_disc(2.0);
        for v in [[0.5, 0.5], [2.0, -1.0], [0.0, 1.9], [3.0, 0.2]] {
            let plus = [1.0 + v[0], 2.0 + v[1]];
            let minus = [1.0 - v[0], 2.0 - v[1]];
            assert_eq!(e.contains(&plus), e.contains(&minus));
        }
    }

    #[test]
    fn enclosing_box_contains_boundary_points() {
        let e = unit_disc(2.0);
        let bx = e.enclosing_box();
        for k in 0..360 {
            let ang = k as f64 * std::f64::consts::PI / 180.0;
            let d = [ang.cos(), ang.sin()];
            let a = e.radius_of(&[1.0 + d[0], 2.0 + d[1]]);
            let s = (2.0 / a).sqrt();
            assert!(bx.contains(&[1.0 + s * d[0], 2.0 + s * d[1]]));
        }
    }

    #[test]
    fn box_vertices_and_singleton() {
        let b = BoxSet::new(vec![0.0, 1.0], vec![2.0, 3.0]).unwrap();
        assert_eq!(b.vertices().len(), 4);
        assert!(BoxSet::singleton(&[1.0, 2.0]).contains(&[1.0, 2.0]));
        assert!(BoxSet::new(vec![1.0], vec![0.0]).is_err());
    }
}

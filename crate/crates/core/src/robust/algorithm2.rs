//! Two-step robust commitment: a first schedule from a loose ellipsoid, then
//! a second schedule against the region where the first schedule's
//! re-dispatch cost stays below a calibrated order statistic.

use super::ccg::{solve_two_stage_robust, solve_two_stage_robust_seeded, CcgOptions, RobustSolution};
use crate::error::Result;
use crate::system::{predispatch_cost, PowerSystem};
use crate::uncertainty::{build_ellipsoid_variant, reconstruct_set, BoxSet, EllipsoidMode, UncertaintySet};

#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    /// Radius of the first-step ellipsoid (largest distance in the shape
    /// split).
    pub alpha: f64,
    /// Cost level of the reconstructed set; `+∞` means the set is the box.
    pub beta: f64,
    pub order_index: usize,
    /// Re-dispatch cost of the first schedule on each size-split sample.
    pub costs: Vec<f64>,
    pub first: RobustSolution,
    pub second: RobustSolution,
}

impl ReconstructionReport {
    /// `C·x₀ + β`, the bound the second schedule's robust objective must not
    /// exceed.
    pub fn anchor_bound(&self, sys: &PowerSystem) -> f64 {
        predispatch_cost(sys, &self.first.schedule) + self.beta
    }
}

/// Runs both steps. The first schedule solves the robust problem over the
/// ellipsoid that encloses every shape-split error; the level set is built
/// around it on the size split; the second solve starts from the first
/// schedule as incumbent.
pub fn run_reconstruction(
    sys: &PowerSystem,
    forecast: &[f64],
    shape_errors: &[Vec<f64>],
    size_errors: &[Vec<f64>],
    eps: f64,
    delta: f64,
    bounds: &BoxSet,
    opts: &CcgOptions,
) -> Result<ReconstructionReport> {
    let loose = build_ellipsoid_variant(forecast, shape_errors, EllipsoidMode::All, bounds.clone())?;
    let alpha = loose.alpha;
    let first = solve_two_stage_robust(sys, forecast, &UncertaintySet::Ellipsoid(loose), opts)?;
    let rec = reconstruct_set(sys, &first.schedule, forecast, size_errors, eps, delta, bounds.clone())?;
    let beta = rec.set.beta;
    let set = UncertaintySet::CostLevel(rec.set);
    let second = solve_two_stage_robust_seeded(sys, forecast, &set, Some(&first.schedule), opts)?;
    Ok(ReconstructionReport {
        alpha,
        beta,
        order_index: rec.order_index,
        costs: rec.costs,
        first,
        second,
    })
}

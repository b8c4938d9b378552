//! Worst-case net load for a fixed schedule.
//!
//! The feasibility question runs first: maximize over the set the smallest
//! total constraint violation any re-dispatch can achieve. Only when that is
//! zero does the cost question run, maximizing the optimal re-dispatch cost.
//! Both are KKT reformulations of the inner LP. Ellipsoids enter through
//! lazy tangent cuts, cost-level sets through a copy of the anchor's
//! re-dispatch constraints.

use super::kkt::{kkt_program, InnerLp, KktProgram, LoadRegion};
use crate::error::Result;
use crate::linalg::jacobi_eigen;
use crate::system::{recourse_value, CommitmentSchedule, CompactTwoStage, PowerSystem};
use crate::uncertainty::{EllipsoidCapSet, UncertaintySet};
use nalgebra::DMatrix;
use ruc_milp::{audit_big_m, solve_milp_with, BigMFlag, LazyCallback, MilpOptions, Row, RowSense, SolveReport, Status};

#[derive(Debug, Clone)]
pub struct SubproblemOptions {
    /// Bound on multipliers of rows whose violation is not priced.
    pub dual_bound: f64,
    /// Largest total violation still treated as feasible.
    pub feas_tol: f64,
    /// Relative slack on the squared radius before a lazy ellipsoid cut is
    /// added; the returned load may lie this far outside.
    pub radius_tol: f64,
    /// Seed the ellipsoid with its principal-axis supporting planes.
    pub axis_cuts: bool,
    pub milp: MilpOptions,
}

impl Default for SubproblemOptions {
    fn default() -> Self {
        SubproblemOptions {
            dual_bound: 1e4,
            feas_tol: 1e-6,
            radius_tol: 1e-4,
            axis_cuts: true,
            milp: MilpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubproblemStatus {
    /// Every load in the set can be re-dispatched; `value` is the worst cost.
    Optimal,
    /// Some load in the set admits no re-dispatch.
    Infeasible,
    /// The search stopped at its node limit; `value` is the best found.
    NodeLimit,
}

#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub status: SubproblemStatus,
    /// Worst-case load found.
    pub load: Vec<f64>,
    /// Re-dispatch cost at `load`, from a direct LP solve; `+∞` when
    /// infeasible.
    pub value: f64,
    /// Objective of the reformulated program, for cross-checking `value`.
    pub kkt_value: f64,
    /// Largest violation of one independent block of re-dispatch
    /// constraints found by the feasibility stage.
    pub violation: f64,
    pub nodes: usize,
    /// Multipliers that ended within 10% of their modelling bound.
    pub flags: Vec<BigMFlag>,
}

fn load_region<'a>(set: &'a UncertaintySet, ct: &CompactTwoStage) -> Result<(LoadRegion, Option<&'a EllipsoidCapSet>)> {
    Ok(match set {
        UncertaintySet::Box(b) => (LoadRegion::boxed(b.lower.clone(), b.upper.clone()), None),
        UncertaintySet::Ellipsoid(e) => {
            let bx = e.enclosing_box();
            (LoadRegion::boxed(bx.lower, bx.upper), Some(e))
        }
        UncertaintySet::CostLevel(c) => {
            let b = &c.bounds;
            let mut region = LoadRegion::boxed(b.lower.clone(), b.upper.clone());
            if c.beta.is_finite() {
                let anchor = InnerLp::from_compact(ct, &c.anchor_vector(), &b.lower, &b.upper)?;
                let n = region.dim();
                region.aux_upper = anchor.bound.clone();
                for row in &anchor.rows {
                    let mut coeffs: Vec<(usize, f64)> = row.a.iter().map(|&(j, a)| (n + j, a)).collect();
                    coeffs.extend(row.d.iter().map(|&(k, d)| (k, -d)));
                    let sense = if row.eq { RowSense::Eq } else { RowSense::Ge };
                    region.rows.push(Row::new(format!("anchor[{}]", row.name), coeffs, sense, row.b0));
                }
                let cost = anchor.cost.iter().enumerate().map(|(j, &f)| (n + j, f)).collect();
                region.rows.push(Row::new("anchor_cost", cost, RowSense::Le, c.beta));
            }
            (region, None)
        }
    })
}

/// Supporting planes of the ellipsoid along its principal axes:
/// `±vᵀ(u − c) ≤ sqrt(α λ)`.
fn axis_cuts(e: &EllipsoidCapSet) -> Vec<Row> {
    let (vals, vecs) = jacobi_eigen(&e.cov);
    let mut rows = vec![];
    for (k, &lam) in vals.iter().enumerate() {
        let reach = (e.alpha * lam.max(0.0)).sqrt();
        for sign in [1.0, -1.0] {
            let coeffs: Vec<(usize, f64)> = (0..e.center.len()).map(|i| (i, sign * vecs[(i, k)])).collect();
            let shift: f64 = coeffs.iter().map(|&(i, a)| a * e.center[i]).sum();
            rows.push(Row::new(format!("axis[{k},{sign}]"), coeffs, RowSense::Le, reach + shift));
        }
    }
    rows
}

/// The tangent plane at the radial projection of `u` onto the ellipsoid,
/// when `u` lies outside it. With `v = u − c` and `q = vᵀΣ⁻¹v`, the cut
/// `(Σ⁻¹v)ᵀ(u' − c) ≤ sqrt(α q)` holds on the whole ellipsoid by
/// Cauchy-Schwarz in the Σ⁻¹ inner product and fails at `u`.
pub fn ellipsoid_cut(e: &EllipsoidCapSet, u: &[f64], rel_tol: f64) -> Option<Row> {
    let q = e.radius_of(u);
    if q <= e.alpha * (1.0 + rel_tol) + 1e-9 {
        return None;
    }
    let v: Vec<f64> = u.iter().zip(&e.center).map(|(a, b)| a - b).collect();
    let g = e.factor().solve(&v);
    let shift: f64 = g.iter().zip(&e.center).map(|(a, b)| a * b).sum();
    let coeffs = g.into_iter().enumerate().filter(|(_, a)| *a != 0.0).collect();
    Some(Row::new("ellipsoid_cut", coeffs, RowSense::Le, (e.alpha * q).sqrt() + shift))
}

/// Lazy separation of the ellipsoid when the objective depends on the
/// load only through the coordinates in `support`. Every other coordinate
/// is set to the in-box value that minimizes the radius, so the search only
/// has to be cut in the support coordinates. With `φ(u_S)` that minimal
/// squared radius, `sqrt φ` is convex and its linearization at a point with
/// `φ > α` is a valid cut.
struct EllipsoidSeparator<'a> {
    e: &'a EllipsoidCapSet,
    precision: DMatrix<f64>,
    support: Vec<usize>,
    others: Vec<usize>,
    rel_tol: f64,
}

impl<'a> EllipsoidSeparator<'a> {
    fn new(e: &'a EllipsoidCapSet, support: Vec<usize>, rel_tol: f64) -> Self {
        let n = e.center.len();
        let mut precision = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut unit = vec![0.0; n];
            unit[k] = 1.0;
            for (i, v) in e.factor().solve(&unit).into_iter().enumerate() {
                precision[(i, k)] = v;
            }
        }
        let others = (0..n).filter(|k| !support.contains(k)).collect();
        EllipsoidSeparator {
            e,
            precision,
            support,
            others,
            rel_tol,
        }
    }

    /// `u` with the non-support coordinates moved to the radius-minimizing
    /// point of their box.
    fn complete(&self, u: &[f64]) -> Vec<f64> {
        let mut v = u.to_vec();
        if self.others.is_empty() {
            return v;
        }
        let (p, c, b) = (&self.precision, &self.e.center, &self.e.bounds);
        let grad_excl = |v: &[f64], k: usize| -> f64 { (0..v.len()).filter(|&j| j != k).map(|j| p[(k, j)] * (v[j] - c[j])).sum() };
        // coordinate descent on a strictly convex quadratic over a box
        for _ in 0..10_000 {
            let mut moved = 0.0f64;
            for &k in &self.others {
                let target = (c[k] - grad_excl(&v, k) / p[(k, k)]).clamp(b.lower[k], b.upper[k]);
                moved = moved.max((target - v[k]).abs() / (1.0 + target.abs()));
                v[k] = target;
            }
            if moved <= 1e-13 {
                break;
            }
        }
        v
    }

    fn cut(&self, u: &[f64]) -> Option<Row> {
        let v = self.complete(u);
        let q = self.e.radius_of(&v);
        if q <= self.e.alpha * (1.0 + self.rel_tol) + 1e-9 {
            return None;
        }
        let (p, c) = (&self.precision, &self.e.center);
        let root = q.sqrt();
        let coeffs: Vec<(usize, f64)> = self
            .support
            .iter()
            .map(|&k| (k, (0..v.len()).map(|j| p[(k, j)] * (v[j] - c[j])).sum::<f64>() / root))
            .filter(|(_, g)| *g != 0.0)
            .collect();
        let shift: f64 = coeffs.iter().map(|&(k, g)| g * v[k]).sum();
        Some(Row::new("ellipsoid_cut", coeffs, RowSense::Le, self.e.alpha.sqrt() - root + shift))
    }
}

/// Load coordinates the inner rows depend on.
fn load_support(inner: &InnerLp) -> Vec<usize> {
    let mut s: Vec<usize> = inner.rows.iter().flat_map(|r| r.d.iter().map(|&(k, _)| k)).collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// Solves the program and returns the report with the load (the first
/// `u_dim` entries of the primal) completed to a point of the set.
fn solve_kkt(prog: &KktProgram, ellipsoid: Option<&EllipsoidCapSet>, support: Vec<usize>, opts: &SubproblemOptions) -> SolveReport {
    let n = prog.u_dim;
    match ellipsoid {
        Some(e) => {
            let sep = EllipsoidSeparator::new(e, support, opts.radius_tol);
            let mut cb = |x: &[f64]| sep.cut(&x[..n]);
            let cb: &mut LazyCallback<'_> = &mut cb;
            let mut rep = solve_milp_with(&prog.lp, Some(cb), &opts.milp);
            if rep.primal.len() >= n {
                let v = sep.complete(&rep.primal[..n]);
                rep.primal[..n].copy_from_slice(&v);
            }
            rep
        }
        None => solve_milp_with(&prog.lp, None, &opts.milp),
    }
}

fn add_ellipsoid_rows(region: &mut LoadRegion, ellipsoid: Option<&EllipsoidCapSet>, opts: &SubproblemOptions) {
    if let (Some(e), true) = (ellipsoid, opts.axis_cuts) {
        region.rows.extend(axis_cuts(e));
    }
}

/// Largest total violation over the set of any block of re-dispatch
/// constraints that share no variable, with the load attaining it.
pub fn feasibility_subproblem(sys: &PowerSystem, x: &CommitmentSchedule, set: &UncertaintySet, opts: &SubproblemOptions) -> Result<SubproblemResult> {
    let ct = CompactTwoStage::build(sys);
    let (mut region, ellipsoid) = load_region(set, &ct)?;
    add_ellipsoid_rows(&mut region, ellipsoid, opts);
    let inner = InnerLp::from_compact(&ct, &ct.x_vector(x), &region.lower, &region.upper)?;
    feasibility_stage(&inner, &region, ellipsoid, opts)
}

fn feasibility_stage(inner: &InnerLp, region: &LoadRegion, ellipsoid: Option<&EllipsoidCapSet>, opts: &SubproblemOptions) -> Result<SubproblemResult> {
    let mut out = SubproblemResult {
        status: SubproblemStatus::Optimal,
        load: region.lower.iter().zip(&region.upper).map(|(l, h)| 0.5 * (l + h)).collect(),
        value: f64::NAN,
        kkt_value: 0.0,
        violation: 0.0,
        nodes: 0,
        flags: vec![],
    };
    let mut node_limited = false;
    // a load is infeasible exactly when some independent block is, so each
    // block is searched on its own
    for block in inner.components() {
        let (phase1, lam, exact) = block.feasibility(&region.lower, &region.upper, opts.dual_bound);
        if !phase1.has_slacks() {
            // no row of this block can be violated anywhere in the box
            continue;
        }
        let prog = kkt_program(&phase1, region, &lam, &exact, "feasibility_kkt")?;
        let rep = solve_kkt(&prog, ellipsoid, load_support(&block), opts);
        out.nodes += rep.nodes;
        match rep.status {
            Status::Optimal | Status::IterationLimit if !rep.primal.is_empty() => {
                node_limited |= rep.status == Status::IterationLimit;
                out.flags.extend(audit_big_m(&prog.dual_records, &rep.primal));
                if rep.objective > out.violation {
                    out.violation = rep.objective;
                    out.kkt_value = rep.objective;
                    out.load = rep.primal[..prog.u_dim].to_vec();
                }
            }
            Status::Infeasible => return Err(crate::error::solver_error("feasibility subproblem (empty uncertainty set?)", rep.status)),
            s => return Err(crate::error::solver_error("feasibility subproblem", s)),
        }
    }
    if out.violation > opts.feas_tol {
        out.status = SubproblemStatus::Infeasible;
        out.value = f64::INFINITY;
    } else if node_limited {
        out.status = SubproblemStatus::NodeLimit;
    }
    Ok(out)
}

/// Worst-case re-dispatch cost of `x` over `set`: a load at which no
/// re-dispatch exists if there is one, else the load maximizing the optimal
/// re-dispatch cost.
pub fn worst_case_subproblem(sys: &PowerSystem, x: &CommitmentSchedule, set: &UncertaintySet, opts: &SubproblemOptions) -> Result<SubproblemResult> {
    let ct = CompactTwoStage::build(sys);
    let (mut region, ellipsoid) = load_region(set, &ct)?;
    add_ellipsoid_rows(&mut region, ellipsoid, opts);
    let inner = InnerLp::from_compact(&ct, &ct.x_vector(x), &region.lower, &region.upper)?;
    let feas = feasibility_stage(&inner, &region, ellipsoid, opts)?;
    if feas.status == SubproblemStatus::Infeasible {
        return Ok(feas);
    }
    let exact = vec![false; inner.rows.len()];
    let lam = vec![opts.dual_bound; inner.rows.len()];
    let prog = kkt_program(&inner, &region, &lam, &exact, "worst_case_kkt")?;
    let rep = solve_kkt(&prog, ellipsoid, load_support(&inner), opts);
    if rep.primal.is_empty() {
        return Err(crate::error::solver_error("worst-case subproblem", rep.status));
    }
    let load = rep.primal[..prog.u_dim].to_vec();
    // the direct LP is the reference; the reformulated objective only
    // matches it when no multiplier bound was active
    let value = recourse_value(sys, x, &load).map_or(rep.objective, |(v, _)| v);
    let mut flags = feas.flags;
    flags.extend(audit_big_m(&prog.dual_records, &rep.primal));
    let status = if rep.status == Status::IterationLimit || feas.status == SubproblemStatus::NodeLimit {
        SubproblemStatus::NodeLimit
    } else {
        SubproblemStatus::Optimal
    };
    Ok(SubproblemResult {
        status,
        load,
        value,
        kkt_value: rep.objective,
        violation: feas.violation,
        nodes: feas.nodes + rep.nodes,
        flags,
    })
}

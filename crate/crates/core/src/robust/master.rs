use crate::error::{solver_error, Result};
use crate::system::{add_predispatch, CommitmentSchedule, CompactTwoStage, PowerSystem};
use ruc_milp::{solve_milp, LinearProgram, MilpOptions, RowSense, Sense, Status};
use serde::{Deserialize, Serialize};

/// Why a load was added to the master.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// The master must re-dispatch it and charge its cost.
    Optimality,
    /// The master must re-dispatch it; its cost is not charged.
    Feasibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub load: Vec<f64>,
    pub kind: ScenarioKind,
}

#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub schedule: CommitmentSchedule,
    /// Estimated worst-case re-dispatch cost.
    pub eta: f64,
    pub objective: f64,
    /// Valid lower bound on the master optimum.
    pub bound: f64,
    pub nodes: usize,
}

/// `min C·x + η` over pre-dispatch schedules for `forecast`, with a
/// re-dispatch copy `y_k` per scenario and `η ≥ F·y_k` for the optimality
/// scenarios.
pub fn master_problem(sys: &PowerSystem, forecast: &[f64], scenarios: &[Scenario], opts: &MilpOptions) -> Result<MasterSolution> {
    let ct = CompactTwoStage::build(sys);
    let mut lp = LinearProgram::new(Sense::Minimize).with_name("ccg_master");
    let idx = add_predispatch(&mut lp, sys, forecast)?;
    let eta = lp.add_var("eta", 0.0, f64::INFINITY, 1.0);
    let x_col = |j: usize| idx.offset + j - ct.x_index.offset;
    for (k, sc) in scenarios.iter().enumerate() {
        let y0 = lp.num_vars();
        for j in 0..ct.num_y() {
            lp.add_var(format!("y{k}[{j}]"), 0.0, f64::INFINITY, 0.0);
        }
        for r in 0..ct.num_rows() {
            let mut coeffs: Vec<(usize, f64)> = ct.a[r].iter().map(|&(j, a)| (y0 + j, a)).collect();
            coeffs.extend(ct.b[r].iter().map(|&(j, b)| (x_col(j), -b)));
            let rhs = ct.d[r].iter().map(|&(i, d)| d * sc.load[i]).sum::<f64>() + ct.e[r];
            lp.add_row(format!("sc{k}[{:?}]", ct.kinds[r]), coeffs, RowSense::Ge, rhs);
        }
        if sc.kind == ScenarioKind::Optimality {
            let mut coeffs = vec![(eta, 1.0)];
            coeffs.extend((0..ct.num_y()).filter(|&j| ct.f[j] != 0.0).map(|j| (y0 + j, -ct.f[j])));
            lp.add_row(format!("eta_cut{k}"), coeffs, RowSense::Ge, 0.0);
        }
    }
    let rep = solve_milp(&lp, opts);
    match rep.status {
        Status::Optimal | Status::IterationLimit if !rep.primal.is_empty() => Ok(MasterSolution {
            schedule: idx.read(&rep.primal),
            eta: rep.primal[eta],
            objective: rep.objective,
            bound: rep.best_bound.min(rep.objective),
            nodes: rep.nodes,
        }),
        s => Err(solver_error("master problem (no schedule survives the scenarios)", s)),
    }
}

//! Column-and-constraint generation for the two-stage robust commitment.

use super::master::{master_problem, Scenario, ScenarioKind};
use super::subproblem::{worst_case_subproblem, SubproblemOptions, SubproblemResult, SubproblemStatus};
use crate::error::{CoreError, Result};
use crate::system::{predispatch_cost, CommitmentSchedule, PowerSystem};
use crate::uncertainty::UncertaintySet;
use ruc_milp::{BigMFlag, MilpOptions};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct CcgOptions {
    /// Relative gap `(UB − LB) / (1 + |UB|)` at which the loop stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Sup-norm distance under which a new worst case repeats an old one.
    pub repeat_tol: f64,
    pub master: MilpOptions,
    pub subproblem: SubproblemOptions,
}

impl Default for CcgOptions {
    fn default() -> Self {
        CcgOptions {
            tol: 1e-4,
            max_iter: 50,
            repeat_tol: 1e-6,
            master: MilpOptions::default(),
            subproblem: SubproblemOptions::default(),
        }
    }
}

/// One line of the iteration log, written as a JSON object.
#[derive(Debug, Clone, Serialize)]
pub struct IterationLog {
    pub iter: usize,
    #[serde(rename = "LB")]
    pub lb: f64,
    #[serde(rename = "UB")]
    pub ub: f64,
    pub gap: f64,
    /// `optimal`, `infeasible`, `node_limit`, or `skipped` when the master
    /// bound alone closed the gap.
    pub subproblem_status: String,
    pub scenario_count: usize,
}

impl IterationLog {
    pub fn to_json_line(&self) -> String {
        // infinite bounds have no JSON spelling; write them as null
        let f = |v: f64| if v.is_finite() { serde_json::json!(v) } else { serde_json::Value::Null };
        serde_json::json!({
            "iter": self.iter,
            "LB": f(self.lb),
            "UB": f(self.ub),
            "gap": f(self.gap),
            "subproblem_status": self.subproblem_status,
            "scenario_count": self.scenario_count,
        })
        .to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GapClosed,
    /// The worst case repeated a scenario already in the master, so the
    /// master's estimate already covers it.
    RepeatedScenario,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct CcgState {
    pub scenarios: Vec<Scenario>,
    pub lb: f64,
    pub ub: f64,
    pub log: Vec<IterationLog>,
    pub stop: StopReason,
    /// Any subproblem stopped at its node limit.
    pub node_limited: bool,
}

impl CcgState {
    pub fn iterations(&self) -> usize {
        self.log.len()
    }

    pub fn gap(&self) -> f64 {
        relative_gap(self.lb, self.ub)
    }

    pub fn converged(&self) -> bool {
        self.stop != StopReason::IterationLimit && !self.node_limited
    }
}

fn status_name(s: SubproblemStatus) -> &'static str {
    match s {
        SubproblemStatus::Optimal => "optimal",
        SubproblemStatus::Infeasible => "infeasible",
        SubproblemStatus::NodeLimit => "node_limit",
    }
}

fn relative_gap(lb: f64, ub: f64) -> f64 {
    if ub.is_finite() {
        (ub - lb).max(0.0) / (1.0 + ub.abs())
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone)]
pub struct RobustSolution {
    pub schedule: CommitmentSchedule,
    /// `C·x` of the returned schedule.
    pub pre_cost: f64,
    /// Worst-case re-dispatch cost of the returned schedule over the set.
    pub worst_case: f64,
    /// Load attaining `worst_case`.
    pub worst_load: Vec<f64>,
    pub state: CcgState,
    pub flags: Vec<BigMFlag>,
}

impl RobustSolution {
    pub fn objective(&self) -> f64 {
        self.pre_cost + self.worst_case
    }
}

/// `min_x C·x + max_{u ∈ set} min_y F·y` by column-and-constraint
/// generation.
pub fn solve_two_stage_robust(sys: &PowerSystem, forecast: &[f64], set: &UncertaintySet, opts: &CcgOptions) -> Result<RobustSolution> {
    solve_two_stage_robust_seeded(sys, forecast, set, None, opts)
}

/// Adds the scenario unless an equal one is present; returns whether it was
/// already there. A load seen before only as a feasibility scenario is
/// upgraded in place when it now also carries a cost.
fn add_scenario(scenarios: &mut Vec<Scenario>, load: &[f64], kind: ScenarioKind, tol: f64) -> bool {
    let close = |s: &Scenario| s.load.iter().zip(load).all(|(a, b)| (a - b).abs() <= tol);
    match scenarios.iter_mut().find(|s| close(s)) {
        Some(s) if s.kind == kind || kind == ScenarioKind::Feasibility => true,
        Some(s) => {
            s.kind = kind;
            false
        }
        None => {
            scenarios.push(Scenario { load: load.to_vec(), kind });
            false
        }
    }
}

/// As [`solve_two_stage_robust`], with `seed` evaluated first as an
/// incumbent. The returned objective is then never worse than the seed's.
pub fn solve_two_stage_robust_seeded(
    sys: &PowerSystem,
    forecast: &[f64],
    set: &UncertaintySet,
    seed: Option<&CommitmentSchedule>,
    opts: &CcgOptions,
) -> Result<RobustSolution> {
    sys.check_load(forecast)?;
    if set.dim() != forecast.len() {
        return Err(CoreError::Dimension(format!("set has dimension {}, forecast {}", set.dim(), forecast.len())));
    }
    let mut state = CcgState {
        scenarios: vec![],
        lb: f64::NEG_INFINITY,
        ub: f64::INFINITY,
        log: vec![],
        stop: StopReason::IterationLimit,
        node_limited: false,
    };
    let mut best: Option<(CommitmentSchedule, SubproblemResult)> = None;
    let mut flags = vec![];
    let consider = |x: &CommitmentSchedule, sub: SubproblemResult, state: &mut CcgState, best: &mut Option<(CommitmentSchedule, SubproblemResult)>| {
        state.node_limited |= sub.status == SubproblemStatus::NodeLimit;
        if sub.status == SubproblemStatus::Infeasible {
            return;
        }
        let total = predispatch_cost(sys, x) + sub.value;
        if total < state.ub {
            state.ub = total;
            *best = Some((x.clone(), sub));
        }
    };
    if let Some(x) = seed {
        let sub = worst_case_subproblem(sys, x, set, &opts.subproblem)?;
        flags.extend(sub.flags.iter().cloned());
        state.scenarios.push(Scenario {
            load: sub.load.clone(),
            kind: if sub.status == SubproblemStatus::Infeasible { ScenarioKind::Feasibility } else { ScenarioKind::Optimality },
        });
        consider(x, sub, &mut state, &mut best);
    }
    for iter in 1..=opts.max_iter {
        let m = master_problem(sys, forecast, &state.scenarios, &opts.master)?;
        state.lb = state.lb.max(m.bound);
        if relative_gap(state.lb, state.ub) <= opts.tol {
            state.log.push(IterationLog {
                iter,
                lb: state.lb,
                ub: state.ub,
                gap: relative_gap(state.lb, state.ub),
                subproblem_status: "skipped".into(),
                scenario_count: state.scenarios.len(),
            });
            state.stop = StopReason::GapClosed;
            break;
        }
        let sub = worst_case_subproblem(sys, &m.schedule, set, &opts.subproblem)?;
        flags.extend(sub.flags.iter().cloned());
        let status = sub.status;
        let kind = if status == SubproblemStatus::Infeasible { ScenarioKind::Feasibility } else { ScenarioKind::Optimality };
        let repeat = add_scenario(&mut state.scenarios, &sub.load, kind, opts.repeat_tol);
        consider(&m.schedule, sub, &mut state, &mut best);
        state.log.push(IterationLog {
            iter,
            lb: state.lb,
            ub: state.ub,
            gap: relative_gap(state.lb, state.ub),
            subproblem_status: status_name(status).into(),
            scenario_count: state.scenarios.len(),
        });
        if relative_gap(state.lb, state.ub) <= opts.tol {
            state.stop = StopReason::GapClosed;
            break;
        }
        if repeat {
            if kind == ScenarioKind::Feasibility {
                return Err(CoreError::Solver {
                    context: "column-and-constraint generation".into(),
                    status: "an infeasible load repeated; the master cannot exclude it".into(),
                });
            }
            state.stop = StopReason::RepeatedScenario;
            break;
        }
    }
    let (schedule, sub) = best.ok_or_else(|| CoreError::Solver {
        context: "column-and-constraint generation".into(),
        status: format!("no robust-feasible schedule found in {} iterations", opts.max_iter),
    })?;
    Ok(RobustSolution {
        pre_cost: predispatch_cost(sys, &schedule),
        worst_case: sub.value,
        worst_load: sub.load,
        schedule,
        state,
        flags,
    })
}

//! The compared commitment methods, surrogate training for a case, and
//! out-of-sample scoring.

use super::case::Case;
use crate::error::{CoreError, Result};
use crate::robust::{run_reconstruction, solve_two_stage_robust, RobustSolution};
use crate::surrogate::{
    combine_forecasts, day_errors, fit_pca, generate_training_set, infeasible_penalty, mse_weight, optimize_weights, optimize_weights_pso, scenario_costs,
    weight_samples, ForecastBundle, PcaModel, PsoOptions, SurrogateModel, TrainReport, TrainingTable, WeightVector,
};
use crate::system::{predispatch_cost, recourse_value, CommitmentSchedule, CompactTwoStage, PowerSystem};
use crate::uncertainty::{build_ellipsoid_set, build_ellipsoid_variant, coverage, BoxSet, CostLevelSet, EllipsoidMode, UncertaintySet};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Ellipsoid enclosing every historical error, MSE weight.
    #[serde(rename = "RO1")]
    Ro1,
    /// Ellipsoid enclosing a `1 − ε` fraction of the errors, MSE weight.
    #[serde(rename = "RO2")]
    Ro2,
    /// Calibrated ellipsoid, surrogate weight, no reconstruction.
    #[serde(rename = "P1")]
    P1,
    /// Reconstructed set, MSE weight.
    #[serde(rename = "P2")]
    P2,
    /// Reconstructed set, weight from the surrogate MILP.
    #[serde(rename = "PROPOSED")]
    Proposed,
    /// Reconstructed set, weight from particle swarm on the surrogate.
    #[serde(rename = "PSO")]
    Pso,
}

/// Where a variant's combination weight comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    /// Least squares against the realized loads.
    Mse,
    /// Exact minimizer of the surrogate over the simplex.
    SurrogateMilp,
    /// Particle swarm on the surrogate.
    SurrogatePso,
}

impl Variant {
    pub const ALL: [Variant; 6] = [Variant::Ro1, Variant::Ro2, Variant::P1, Variant::P2, Variant::Proposed, Variant::Pso];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ro1 => "RO1",
            Variant::Ro2 => "RO2",
            Variant::P1 => "P1",
            Variant::P2 => "P2",
            Variant::Proposed => "PROPOSED",
            Variant::Pso => "PSO",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CoreError::InvalidParameter(format!("unknown variant {s:?}; expected one of RO1, RO2, P1, P2, PROPOSED, PSO")))
    }

    /// Radius chosen by an order statistic with a coverage guarantee.
    pub fn calibrated(self) -> bool {
        !matches!(self, Variant::Ro1 | Variant::Ro2)
    }

    /// Weight chosen for the downstream cost rather than accuracy.
    pub fn decision_focused(self) -> bool {
        self.weight_rule() != WeightRule::Mse
    }

    /// Solves a second time on the cost-level set.
    pub fn reconstructs(self) -> bool {
        matches!(self, Variant::P2 | Variant::Proposed | Variant::Pso)
    }

    pub fn weight_rule(self) -> WeightRule {
        match self {
            Variant::Ro1 | Variant::Ro2 | Variant::P2 => WeightRule::Mse,
            Variant::P1 | Variant::Proposed => WeightRule::SurrogateMilp,
            Variant::Pso => WeightRule::SurrogatePso,
        }
    }

    pub fn needs_surrogate(self) -> bool {
        self.decision_focused()
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A trained surrogate with the table it was fitted to.
#[derive(Debug, Clone)]
pub struct TrainedSurrogate {
    pub model: SurrogateModel,
    pub table: TrainingTable,
    pub report: TrainReport,
}

/// Training rows for every training day and sampled weight of the case.
pub fn build_training_table(case: &Case) -> Result<(TrainingTable, PcaModel)> {
    let s = &case.config.surrogate;
    let days = case.training_days();
    if days.is_empty() {
        return Err(CoreError::NotEnoughData("the training split is empty".into()));
    }
    // PCA on every method's prediction of every training day
    let pooled: Vec<Vec<f64>> = days.iter().flat_map(|d| d.methods.iter().cloned()).collect();
    let pca = fit_pca(&pooled, s.components)?;
    let weights = weight_samples(case.num_methods(), s.weight_step, s.random_weights, case.config.seed)?;
    let table = generate_training_set(&case.training_setup(), &pca, days, &weights)?;
    Ok((table, pca))
}

pub fn train_case_surrogate(case: &Case) -> Result<TrainedSurrogate> {
    let (table, pca) = build_training_table(case)?;
    let mut opts = case.config.surrogate.train.clone();
    opts.seed = case.config.seed;
    let (model, report) = SurrogateModel::fit(&table, pca, &opts)?;
    Ok(TrainedSurrogate { model, table, report })
}

/// The weight a variant commits with on `day`.
pub fn select_weight(case: &Case, rule: WeightRule, day: &ForecastBundle, surrogate: Option<&SurrogateModel>) -> Result<WeightVector> {
    let need = || surrogate.ok_or_else(|| CoreError::InvalidParameter("this variant needs a trained surrogate".into()));
    match rule {
        WeightRule::Mse => mse_weight(case.fit_days()),
        WeightRule::SurrogateMilp => Ok(optimize_weights(need()?, day)?.0),
        WeightRule::SurrogatePso => {
            let model = need()?;
            let s = &case.config.surrogate;
            let opts = PsoOptions {
                particles: s.pso_particles,
                max_evals: s.pso_evals,
                seed: case.config.seed,
                ..PsoOptions::default()
            };
            let res = optimize_weights_pso(|w| model.predict(day, w).unwrap_or(f64::INFINITY), case.num_methods(), &opts);
            Ok(res.weight)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutOfSample {
    /// Fraction of test realizations with a feasible re-dispatch.
    pub feasible_rate: f64,
    /// `C·x` plus the re-dispatch cost at the realized load, or the
    /// infeasibility penalty when there is none.
    pub test_cost: f64,
    pub realized_feasible: bool,
}

/// Scores a fixed schedule on `forecast + e` for each test error, and on
/// the realized load.
pub fn evaluate_out_of_sample(
    sys: &PowerSystem,
    x: &CommitmentSchedule,
    forecast: &[f64],
    test_errors: &[Vec<f64>],
    truth: &[f64],
    bounds: &BoxSet,
) -> Result<OutOfSample> {
    if test_errors.is_empty() {
        return Err(CoreError::NotEnoughData("no test errors to evaluate on".into()));
    }
    sys.check_load(forecast)?;
    sys.check_load(truth)?;
    let penalty = infeasible_penalty(sys, bounds);
    let outcomes = scenario_costs(sys, x, forecast, test_errors, penalty);
    let feasible_rate = outcomes.iter().filter(|(_, ok)| *ok).count() as f64 / outcomes.len() as f64;
    let pre = predispatch_cost(sys, x);
    let (test_cost, realized_feasible) = match recourse_value(sys, x, truth) {
        Some((v, _)) => (pre + v, true),
        None => (pre + penalty, false),
    };
    Ok(OutOfSample {
        feasible_rate,
        test_cost,
        realized_feasible,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: Variant,
    pub target_day: i64,
    pub weight: Vec<f64>,
    /// Robust objective `C·x + worst-case re-dispatch` of the committed
    /// schedule over its set.
    pub objective: f64,
    pub pre_cost: f64,
    pub worst_case: f64,
    pub feasible_rate: f64,
    pub test_cost: f64,
    pub realized_feasible: bool,
    /// Fraction of test realizations outside the final set.
    pub points_outside: f64,
    pub set_kind: String,
    /// Ellipsoid radius (first-step radius for reconstructing variants).
    pub alpha: f64,
    /// Cost level of the reconstructed set; absent when the set is the whole
    /// box or not reconstructed.
    pub beta: Option<f64>,
    /// Bound `C·x₀ + β` the reconstructed objective must not exceed.
    pub anchor_bound: Option<f64>,
    pub converged: bool,
    pub big_m_flags: usize,
    pub wall_time: f64,
    pub schedule: CommitmentSchedule,
    /// One JSON object per C&CG iteration of the final solve.
    pub log: Vec<serde_json::Value>,
}

impl RunReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The iteration log as JSON lines.
    pub fn log_lines(&self) -> String {
        self.log.iter().map(|v| format!("{v}\n")).collect()
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn log_values(sol: &RobustSolution) -> Vec<serde_json::Value> {
    sol.state.log.iter().map(|l| serde_json::from_str(&l.to_json_line()).expect("log line is JSON")).collect()
}

/// Commits the target day with one variant and scores the schedule.
pub fn run_method(case: &Case, variant: Variant, surrogate: Option<&SurrogateModel>) -> Result<RunReport> {
    let started = Instant::now();
    let day = case.target_bundle();
    let truth = day.truth.as_ref().ok_or_else(|| CoreError::NotEnoughData("target day has no realized load".into()))?;
    let w = select_weight(case, variant.weight_rule(), day, surrogate)?;
    let w = WeightVector::new(w.0)?;
    run_with_weight(case, variant, &w, truth, started)
}

/// Runs a variant's set construction and solve with a given weight. The
/// weight rule of the variant is ignored.
pub fn run_method_with_weight(case: &Case, variant: Variant, w: &WeightVector) -> Result<RunReport> {
    let truth = case
        .target_bundle()
        .truth
        .as_ref()
        .ok_or_else(|| CoreError::NotEnoughData("target day has no realized load".into()))?;
    run_with_weight(case, variant, w, truth, Instant::now())
}

fn run_with_weight(case: &Case, variant: Variant, w: &WeightVector, truth: &[f64], started: Instant) -> Result<RunReport> {
    let cfg = &case.config;
    let opts = cfg.ccg_options();
    let forecast = combine_forecasts(case.target_bundle(), w)?;
    let shape = day_errors(&case.days[case.layout.shape.clone()], w)?;
    let size = day_errors(&case.days[case.layout.size.clone()], w)?;
    let test = day_errors(&case.days[case.layout.test.clone()], w)?;
    let bounds = case.bounds.clone();

    let (solution, set, alpha, beta, anchor) = match variant {
        Variant::Ro1 | Variant::Ro2 | Variant::P1 => {
            let e = match variant {
                Variant::Ro1 => build_ellipsoid_variant(&forecast, &[shape, size].concat(), EllipsoidMode::All, bounds)?,
                Variant::Ro2 => build_ellipsoid_variant(&forecast, &[shape, size].concat(), EllipsoidMode::Fraction { eps: cfg.eps }, bounds)?,
                _ => build_ellipsoid_set(&forecast, &shape, &size, cfg.eps, cfg.delta, bounds)?,
            };
            let alpha = e.alpha;
            let set = UncertaintySet::Ellipsoid(e);
            (solve_two_stage_robust(&case.sys, &forecast, &set, &opts)?, set, alpha, None, None)
        }
        Variant::P2 | Variant::Proposed | Variant::Pso => {
            let level = day_errors(case.level_days(), w)?;
            let rep = run_reconstruction(&case.sys, &forecast, &shape, &level, cfg.eps, cfg.delta, &bounds, &opts)?;
            let anchor = rep.anchor_bound(&case.sys);
            let set = CostLevelSet {
                bounds,
                anchor: rep.first.schedule.clone(),
                beta: rep.beta,
                compact: CompactTwoStage::build(&case.sys),
            };
            (rep.second, UncertaintySet::CostLevel(set), rep.alpha, finite(rep.beta), finite(anchor))
        }
    };

    let oos = evaluate_out_of_sample(&case.sys, &solution.schedule, &forecast, &test, truth, &case.bounds)?;
    let test_loads: Vec<Vec<f64>> = test.iter().map(|e| forecast.iter().zip(e).map(|(a, b)| a + b).collect()).collect();
    let points_outside = 1.0 - coverage(&set, &test_loads);
    Ok(RunReport {
        variant,
        target_day: case.day_ids[case.target],
        weight: w.0.clone(),
        objective: solution.objective(),
        pre_cost: solution.pre_cost,
        worst_case: solution.worst_case,
        feasible_rate: oos.feasible_rate,
        test_cost: oos.test_cost,
        realized_feasible: oos.realized_feasible,
        points_outside,
        set_kind: set.kind().to_string(),
        alpha,
        beta,
        anchor_bound: anchor,
        converged: solution.state.converged(),
        big_m_flags: solution.flags.len(),
        wall_time: started.elapsed().as_secs_f64(),
        log: log_values(&solution),
        schedule: solution.schedule.clone(),
    })
}

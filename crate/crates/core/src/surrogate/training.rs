//! Training data for the surrogate: for each target day and weight, the
//! two-step robust schedule and its evaluated cost.

use super::forecast::{combine_forecasts, ForecastBundle, WeightVector};
use super::pca::PcaModel;
use crate::error::{CoreError, Result};
use crate::robust::{run_reconstruction, CcgOptions};
use crate::system::{predispatch_cost, recourse_value, CommitmentSchedule, PowerSystem};
use crate::uncertainty::{ceil_fraction_index, kth_smallest, BoxSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

/// Cost charged for a realization the schedule cannot re-dispatch:
/// `(Σ Ū)·max_g max(ρ⁺_g, ρ⁻_g)` on top of the pre-dispatch cost. It
/// exceeds any feasible re-dispatch cost, so sorting stays meaningful.
pub fn infeasible_penalty(sys: &PowerSystem, bounds: &BoxSet) -> f64 {
    let rate = sys.generators.iter().map(|g| g.rho_plus.max(g.rho_minus)).fold(0.0, f64::max);
    bounds.upper.iter().map(|u| u.abs()).sum::<f64>() * rate
}

/// Total cost `C·x + re-dispatch` at `forecast + e` for each error, with
/// the penalty standing in for infeasible re-dispatch, and whether each
/// realization was feasible.
pub fn scenario_costs(sys: &PowerSystem, x: &CommitmentSchedule, forecast: &[f64], errors: &[Vec<f64>], penalty: f64) -> Vec<(f64, bool)> {
    let f = predispatch_cost(sys, x);
    errors
        .iter()
        .map(|e| {
            let u: Vec<f64> = forecast.iter().zip(e).map(|(a, b)| a + b).collect();
            match recourse_value(sys, x, &u) {
                Some((v, _)) => (f + v, true),
                None => (f + penalty, false),
            }
        })
        .collect()
}

/// The `⌈(1 − ε) N′⌉`-th smallest total cost over the evaluation errors.
pub fn evaluate_strategy_cost(sys: &PowerSystem, x: &CommitmentSchedule, forecast: &[f64], eval_errors: &[Vec<f64>], eps: f64, bounds: &BoxSet) -> Result<f64> {
    if eval_errors.is_empty() {
        return Err(CoreError::NotEnoughData("no evaluation errors".into()));
    }
    let costs: Vec<f64> = scenario_costs(sys, x, forecast, eval_errors, infeasible_penalty(sys, bounds)).into_iter().map(|(c, _)| c).collect();
    Ok(kth_smallest(&costs, ceil_fraction_index(costs.len(), eps)))
}

/// The step-`step` grid on the simplex followed by `n_random` uniform
/// Dirichlet draws.
pub fn weight_samples(methods: usize, step: f64, n_random: usize, seed: u64) -> Result<Vec<WeightVector>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(CoreError::InvalidParameter(format!("grid step {step} must lie in (0, 1]")));
    }
    let k = (1.0 / step).round() as usize;
    let mut out = vec![];
    let mut counts = vec![0usize; methods];
    // enumerate compositions of k into `methods` parts
    fn rec(counts: &mut Vec<usize>, idx: usize, left: usize, k: usize, out: &mut Vec<WeightVector>) {
        if idx == counts.len() - 1 {
            counts[idx] = left;
            out.push(WeightVector(counts.iter().map(|&c| c as f64 / k as f64).collect()));
            return;
        }
        for c in (0..=left).rev() {
            counts[idx] = c;
            rec(counts, idx + 1, left - c, k, out);
        }
    }
    rec(&mut counts, 0, k, k, &mut out);
    if n_random > 0 && methods >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // normalized unit exponentials are Dirichlet(1, …, 1)
        for _ in 0..n_random {
            let e: Vec<f64> = (0..methods).map(|_| Exp1.sample(&mut rng)).collect();
            let s: f64 = e.iter().sum();
            out.push(WeightVector(e.into_iter().map(|x: f64| x / s).collect()));
        }
    }
    Ok(out)
}

/// Historical data and settings shared by every training row.
#[derive(Debug, Clone)]
pub struct TrainingSetup<'a> {
    pub sys: &'a PowerSystem,
    /// Days whose errors fix the first-step ellipsoid.
    pub shape: &'a [ForecastBundle],
    /// Days whose errors calibrate the reconstructed set's level.
    pub size: &'a [ForecastBundle],
    /// Days whose errors score a schedule.
    pub eval: &'a [ForecastBundle],
    pub eps: f64,
    pub delta: f64,
    pub bounds: BoxSet,
    pub ccg: CcgOptions,
}

/// Forecast errors of the combined prediction split by role.
#[derive(Debug, Clone)]
pub struct WeightedErrors {
    pub shape: Vec<Vec<f64>>,
    pub size: Vec<Vec<f64>>,
    pub eval: Vec<Vec<f64>>,
}

/// Realized-minus-combined errors of each day.
pub fn day_errors(days: &[ForecastBundle], w: &WeightVector) -> Result<Vec<Vec<f64>>> {
    days.iter()
        .map(|d| d.errors(w)?.ok_or_else(|| CoreError::NotEnoughData("history day without realized load".into())))
        .collect()
}

impl TrainingSetup<'_> {
    pub fn errors(&self, w: &WeightVector) -> Result<WeightedErrors> {
        Ok(WeightedErrors {
            shape: day_errors(self.shape, w)?,
            size: day_errors(self.size, w)?,
            eval: day_errors(self.eval, w)?,
        })
    }

    /// Two-step robust schedule for `day` under weight `w`, and its evaluated
    /// cost.
    pub fn evaluate(&self, day: &ForecastBundle, w: &WeightVector) -> Result<(CommitmentSchedule, f64)> {
        let forecast = combine_forecasts(day, w)?;
        let errs = self.errors(w)?;
        let rep = run_reconstruction(self.sys, &forecast, &errs.shape, &errs.size, self.eps, self.delta, &self.bounds, &self.ccg)?;
        let cost = evaluate_strategy_cost(self.sys, &rep.second.schedule, &forecast, &errs.eval, self.eps, &self.bounds)?;
        Ok((rep.second.schedule, cost))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRow {
    pub day: usize,
    /// Principal components of the combined prediction.
    pub features: Vec<f64>,
    pub weights: WeightVector,
    pub pre_cost: f64,
    pub cost: f64,
}

impl TrainingRow {
    /// Network input: components, then the first `M − 1` weights.
    pub fn input(&self) -> Vec<f64> {
        let mut x = self.features.clone();
        x.extend_from_slice(self.weights.free());
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTable {
    pub n_components: usize,
    pub n_methods: usize,
    pub rows: Vec<TrainingRow>,
}

impl TrainingTable {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["day".to_string()];
        h.extend((0..self.n_components).map(|j| format!("d{j}")));
        h.extend((0..self.n_methods).map(|m| format!("w{m}")));
        h.push("pre_cost".into());
        h.push("cost".into());
        h
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![r.day.to_string()];
            rec.extend(r.features.iter().chain(&r.weights.0).map(|v| format!("{v}")));
            rec.push(format!("{}", r.pre_cost));
            rec.push(format!("{}", r.cost));
            w.write_record(rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn from_csv_str(text: &str, n_components: usize, n_methods: usize, origin: &str) -> Result<Self> {
        let mut table = TrainingTable {
            n_components,
            n_methods,
            rows: vec![],
        };
        let width = table.header().len();
        let err = |line: usize, msg: String| CoreError::Csv {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| err(1, e.to_string()))?.clone();
        if header.iter().collect::<Vec<_>>() != table.header() {
            return Err(err(1, format!("expected header {:?}", table.header())));
        }
        for (k, rec) in r.records().enumerate() {
            let line = k + 2;
            let rec = rec.map_err(|e| err(line, e.to_string()))?;
            if rec.len() != width {
                return Err(err(line, format!("row has {} fields, expected {width}", rec.len())));
            }
            let day = rec[0].parse::<usize>().map_err(|e| err(line, format!("day: {e}")))?;
            let vals = (1..width)
                .map(|c| rec[c].trim().parse::<f64>().map_err(|e| err(line, format!("column {}: {e}", c + 1))))
                .collect::<Result<Vec<f64>>>()?;
            let (features, rest) = vals.split_at(n_components);
            let weights = WeightVector::new(rest[..n_methods].to_vec()).map_err(|e| err(line, e.to_string()))?;
            table.rows.push(TrainingRow {
                day,
                features: features.to_vec(),
                weights,
                pre_cost: rest[n_methods],
                cost: rest[n_methods + 1],
            });
        }
        Ok(table)
    }
}

/// One row per (target day, weight): the components of the combined
/// prediction, the weight, and the evaluated cost of the two-step robust
/// schedule. Rows are computed in parallel and returned day-major.
pub fn generate_training_set(setup: &TrainingSetup<'_>, pca: &PcaModel, days: &[ForecastBundle], weights: &[WeightVector]) -> Result<TrainingTable> {
    let n_methods = days.first().map_or(0, ForecastBundle::num_methods);
    let jobs: Vec<(usize, &WeightVector)> = (0..days.len()).flat_map(|d| weights.iter().map(move |w| (d, w))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(d, w)| {
            let forecast = combine_forecasts(&days[d], w)?;
            let (x, cost) = setup.evaluate(&days[d], w)?;
            Ok(TrainingRow {
                day: d,
                features: pca.project(&forecast),
                weights: w.clone(),
                pre_cost: predispatch_cost(setup.sys, &x),
                cost,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainingTable {
        n_components: pca.num_components(),
        n_methods,
        rows,
    })
}

//! Case configuration and loading: the system, per-day forecasts and truth,
//! and the chronological split of the history into roles.

use super::synthetic::LoadBounds;
use crate::error::{CoreError, Result};
use crate::robust::CcgOptions;
use crate::surrogate::{day_errors, ForecastBundle, TrainOptions, TrainingSetup, WeightVector};
use crate::system::PowerSystem;
use crate::uncertainty::{BoxSet, ErrorDataset, ErrorSplit, ProfileTable};
use serde::{Deserialize, Serialize};
use std::ops::Range;
use std::path::{Path, PathBuf};

/// Day counts of each role, laid out chronologically as
/// shape | size | reconstruction | evaluation | training | test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    /// Errors fixing the ellipsoid mean and covariance.
    pub shape: usize,
    /// Errors calibrating the ellipsoid radius and, unless `reconstruction`
    /// is nonzero, the cost level.
    pub size: usize,
    /// A disjoint split for the cost level; 0 reuses the size split.
    pub reconstruction: usize,
    /// Errors scoring a schedule when building surrogate training rows.
    pub evaluation: usize,
    /// Target days of the surrogate training rows.
    pub training: usize,
    /// Errors for the out-of-sample feasible rate.
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.shape + self.size + self.reconstruction + self.evaluation + self.training + self.test
    }

    fn ranges(&self) -> SplitLayout {
        let mut at = 0;
        let mut next = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        SplitLayout {
            shape: next(self.shape),
            size: next(self.size),
            reconstruction: next(self.reconstruction),
            evaluation: next(self.evaluation),
            training: next(self.training),
            test: next(self.test),
        }
    }
}

/// Day-index ranges of each role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitLayout {
    pub shape: Range<usize>,
    pub size: Range<usize>,
    pub reconstruction: Range<usize>,
    pub evaluation: Range<usize>,
    pub training: Range<usize>,
    pub test: Range<usize>,
}

/// Surrogate training and weight-search settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurrogateSettings {
    pub components: usize,
    /// Simplex grid step of the training weights.
    pub weight_step: f64,
    /// Uniform random weights added to the grid.
    pub random_weights: usize,
    pub train: TrainOptions,
    pub pso_particles: usize,
    pub pso_evals: usize,
}

impl Default for SurrogateSettings {
    fn default() -> Self {
        SurrogateSettings {
            components: 3,
            weight_step: 0.5,
            random_weights: 4,
            train: TrainOptions::default(),
            pso_particles: 10,
            pso_evals: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseConfig {
    pub system: PathBuf,
    pub truth: PathBuf,
    /// One prediction CSV per forecasting method.
    pub forecasts: Vec<PathBuf>,
    /// Net-load box; derived from the truth when absent.
    pub bounds: Option<PathBuf>,
    pub eps: f64,
    pub delta: f64,
    pub splits: SplitSizes,
    /// Day index of the committed day; defaults to the first day after the
    /// splits.
    pub target_day: Option<usize>,
    /// Relative C&CG gap.
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub surrogate: SurrogateSettings,
}

impl CaseConfig {
    /// A config for the files of a generated case with the given splits and
    /// default settings.
    pub fn for_files(system: PathBuf, truth: PathBuf, forecasts: Vec<PathBuf>, bounds: Option<PathBuf>, splits: SplitSizes, seed: u64) -> Self {
        CaseConfig {
            system,
            truth,
            forecasts,
            bounds,
            eps: 0.1,
            delta: 0.1,
            splits,
            target_day: None,
            tolerance: 1e-4,
            max_iter: 50,
            seed,
            surrogate: SurrogateSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(CoreError::InvalidParameter(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(CoreError::InvalidParameter(format!("tolerance {} must be nonnegative", self.tolerance)));
        }
        if self.forecasts.is_empty() {
            return Err(CoreError::InvalidParameter("at least one forecast file is required".into()));
        }
        Ok(())
    }

    pub fn ccg_options(&self) -> CcgOptions {
        CcgOptions {
            tol: self.tolerance,
            max_iter: self.max_iter,
            ..CcgOptions::default()
        }
    }
}

/// A loaded case: one bundle per day with every method's prediction and the
/// realized load.
#[derive(Debug, Clone)]
pub struct Case {
    pub config: CaseConfig,
    pub sys: PowerSystem,
    pub days: Vec<ForecastBundle>,
    pub day_ids: Vec<i64>,
    pub bounds: BoxSet,
    pub layout: SplitLayout,
    pub target: usize,
}

/// Reads and checks every file named by the config.
pub fn load_case(config: &CaseConfig) -> Result<Case> {
    config.validate()?;
    let sys = PowerSystem::load_json(&config.system)?;
    let (nb, nt) = (sys.num_buses(), sys.horizon);
    let truth = ProfileTable::read(&config.truth, nb, nt)?;
    let forecasts = config.forecasts.iter().map(|p| ProfileTable::read(p, nb, nt)).collect::<Result<Vec<_>>>()?;
    let bounds = match &config.bounds {
        Some(p) => Some(read_bounds(p)?),
        None => None,
    };
    Case::from_tables(config.clone(), sys, &truth, &forecasts, bounds)
}

fn read_bounds(path: &Path) -> Result<BoxSet> {
    let text = std::fs::read_to_string(path)?;
    let b: LoadBounds = serde_json::from_str(&text)?;
    BoxSet::new(b.lower, b.upper)
}

/// Box spanning the realized loads widened by their range on each side.
fn bounds_from_truth(truth: &ProfileTable) -> Result<BoxSet> {
    let n = truth.buses * truth.periods;
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for row in &truth.rows {
        for i in 0..n {
            lo[i] = lo[i].min(row[i]);
            hi[i] = hi[i].max(row[i]);
        }
    }
    let lower = lo.iter().zip(&hi).map(|(l, h)| l - (h - l)).collect();
    let upper = lo.iter().zip(&hi).map(|(l, h)| h + (h - l)).collect();
    BoxSet::new(lower, upper)
}

/// Target day index, after checking that the splits and target fit in
/// `days` days.
fn check_layout(config: &CaseConfig, days: usize) -> Result<usize> {
    let needed = config.splits.total();
    if needed >= days {
        return Err(CoreError::NotEnoughData(format!(
            "splits use {needed} days and a target day is needed, but the case has {days} days"
        )));
    }
    let target = config.target_day.unwrap_or(needed);
    if target < needed || target >= days {
        return Err(CoreError::InvalidParameter(format!("target day {target} must lie after the {needed} split days and before {days}")));
    }
    Ok(target)
}

impl Case {
    /// The same data under another config (splits, ε, δ, settings).
    pub fn reconfigure(&self, config: CaseConfig) -> Result<Case> {
        config.validate()?;
        let target = check_layout(&config, self.days.len())?;
        Ok(Case {
            layout: config.splits.ranges(),
            target,
            config,
            ..self.clone()
        })
    }

    /// Assembles a case from in-memory tables; every forecast table must
    /// list the same days as the truth.
    pub fn from_tables(config: CaseConfig, sys: PowerSystem, truth: &ProfileTable, forecasts: &[ProfileTable], bounds: Option<BoxSet>) -> Result<Self> {
        config.validate()?;
        let n = sys.load_dim();
        if truth.buses * truth.periods != n {
            return Err(CoreError::Dimension(format!("truth has {} entries per day, system needs {n}", truth.buses * truth.periods)));
        }
        for (m, f) in forecasts.iter().enumerate() {
            if f.days != truth.days {
                return Err(CoreError::InvalidParameter(format!("forecast {m} lists different days than the truth")));
            }
            if f.buses * f.periods != n {
                return Err(CoreError::Dimension(format!("forecast {m} has {} entries per day, system needs {n}", f.buses * f.periods)));
            }
        }
        if forecasts.is_empty() {
            return Err(CoreError::InvalidParameter("at least one forecast table is required".into()));
        }
        let target = check_layout(&config, truth.rows.len())?;
        let bounds = match bounds {
            Some(b) => b,
            None => bounds_from_truth(truth)?,
        };
        if bounds.dim() != n {
            return Err(CoreError::Dimension(format!("load box has dimension {}, system needs {n}", bounds.dim())));
        }
        let days = (0..truth.rows.len())
            .map(|d| ForecastBundle::new(forecasts.iter().map(|f| f.rows[d].clone()).collect(), Some(truth.rows[d].clone())))
            .collect::<Result<Vec<_>>>()?;
        let layout = config.splits.ranges();
        Ok(Case {
            sys,
            days,
            day_ids: truth.days.clone(),
            bounds,
            layout,
            target,
            config,
        })
    }

    pub fn num_methods(&self) -> usize {
        self.days[0].num_methods()
    }

    pub fn range(&self, split: ErrorSplit) -> Range<usize> {
        match split {
            ErrorSplit::Shape => self.layout.shape.clone(),
            ErrorSplit::Size => self.layout.size.clone(),
            ErrorSplit::Reconstruction => self.layout.reconstruction.clone(),
            ErrorSplit::Evaluation => self.layout.evaluation.clone(),
            ErrorSplit::Test => self.layout.test.clone(),
        }
    }

    /// Errors of the `w`-combined prediction on one split.
    pub fn errors(&self, split: ErrorSplit, w: &WeightVector) -> Result<ErrorDataset> {
        let r = self.range(split);
        Ok(ErrorDataset {
            split,
            days: self.day_ids[r.clone()].to_vec(),
            samples: day_errors(&self.days[r], w)?,
        })
    }

    /// Days the cost level is calibrated on: the reconstruction split when
    /// it is nonempty, otherwise the size split.
    pub fn level_days(&self) -> &[ForecastBundle] {
        if self.layout.reconstruction.is_empty() {
            &self.days[self.layout.size.clone()]
        } else {
            &self.days[self.layout.reconstruction.clone()]
        }
    }

    /// Days the MSE weight is fitted on: the shape and size splits.
    pub fn fit_days(&self) -> &[ForecastBundle] {
        &self.days[self.layout.shape.start..self.layout.size.end]
    }

    pub fn training_days(&self) -> &[ForecastBundle] {
        &self.days[self.layout.training.clone()]
    }

    pub fn target_bundle(&self) -> &ForecastBundle {
        &self.days[self.target]
    }

    pub fn training_setup(&self) -> TrainingSetup<'_> {
        TrainingSetup {
            sys: &self.sys,
            shape: &self.days[self.layout.shape.clone()],
            size: self.level_days(),
            eval: &self.days[self.layout.evaluation.clone()],
            eps: self.config.eps,
            delta: self.config.delta,
            bounds: self.bounds.clone(),
            ccg: self.config.ccg_options(),
        }
    }
}

//! Synthetic benchmark cases: a known Gaussian error model, several
//! fabricated forecasting methods, and the files a case is loaded from.

use super::io::write_atomic;
use crate::error::{CoreError, Result};
use crate::system::{ptdf_from_reactances, Generator, Line, PowerSystem};
use crate::uncertainty::ProfileTable;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// How one fabricated method errs: `prediction = truth − (e + bias + noise·z)`
/// with `e` the shared ground-truth error and `z` standard normal per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodProfile {
    pub bias: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub system: PowerSystem,
    /// Mean net load, bus-major.
    pub base_load: Vec<f64>,
    /// Standard deviation of the daily multiplicative level around 1.
    pub daily_level_sd: f64,
    /// Standard deviation of the shared error per entry.
    pub error_sd: Vec<f64>,
    /// Correlation between periods `t` and `t'` is `time_corr^|t − t'|`.
    pub time_corr: f64,
    /// Correlation between different buses in the same period.
    pub bus_corr: f64,
    pub methods: Vec<MethodProfile>,
    pub days: usize,
    /// Net-load box every realization is assumed to lie in.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Generator with the cost and limit pattern used by the shipped cases.
pub fn generator_template(bus: usize, p_min: f64, p_max: f64, rho: f64) -> Generator {
    Generator {
        bus,
        o_plus: 100.0,
        o_minus: 10.0,
        rho,
        gamma_plus: 2.0,
        gamma_minus: 1.0,
        rho_plus: rho + 5.0,
        rho_minus: 3.0,
        p_min,
        p_max,
        r_plus_max: p_max / 2.0,
        r_minus_max: p_max / 2.0,
        k_plus: p_max,
        k_minus: p_max,
        k_up: p_max,
        k_down: p_max,
        t_up: 1,
        t_down: 1,
        theta0: 0,
    }
}

/// Three buses in a triangle with equal reactances, a cheap unit at bus 1
/// and a peaker at bus 2.
pub fn three_bus_system(horizon: usize) -> PowerSystem {
    let buses = vec![1, 2, 3];
    let capacity = 100.0;
    let lines = vec![
        Line { from: 1, to: 2, capacity },
        Line { from: 2, to: 3, capacity },
        Line { from: 1, to: 3, capacity },
    ];
    let gens = vec![generator_template(1, 20.0, 150.0, 20.0), generator_template(2, 0.0, 80.0, 35.0)];
    let gen_bus: Vec<usize> = gens.iter().map(|g| g.bus).collect();
    let ptdf = ptdf_from_reactances(&buses, &lines, &[0.1; 3], &gen_bus, 0).expect("triangle is connected");
    PowerSystem {
        horizon,
        buses,
        generators: gens,
        lines,
        ptdf,
    }
}

impl SyntheticSpec {
    /// The default benchmark: three buses, a rising daily profile, and three
    /// methods with opposite biases and growing noise.
    pub fn three_bus(horizon: usize, days: usize) -> Self {
        let system = three_bus_system(horizon);
        let shares = [0.25, 0.3, 0.45];
        let mut base_load = vec![];
        for share in shares {
            for t in 0..horizon {
                let phase = t as f64 / horizon.max(1) as f64;
                base_load.push(share * (110.0 + 40.0 * (std::f64::consts::PI * phase).sin()));
            }
        }
        let error_sd = base_load.iter().map(|b| 0.06 * b).collect();
        let lower = base_load.iter().map(|b| 0.5 * b).collect();
        let upper = base_load.iter().map(|b| 1.4 * b).collect();
        SyntheticSpec {
            system,
            base_load,
            daily_level_sd: 0.05,
            error_sd,
            time_corr: 0.6,
            bus_corr: 0.3,
            methods: vec![
                MethodProfile { bias: 1.5, noise_sd: 1.0 },
                MethodProfile { bias: -1.0, noise_sd: 2.0 },
                MethodProfile { bias: 0.0, noise_sd: 3.5 },
            ],
            days,
            lower,
            upper,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let n = self.system.load_dim();
        for (name, v) in [("base_load", &self.base_load), ("error_sd", &self.error_sd), ("lower", &self.lower), ("upper", &self.upper)] {
            if v.len() != n {
                return Err(CoreError::Dimension(format!("{name} has {} entries, expected {n}", v.len())));
            }
        }
        if self.methods.is_empty() {
            return Err(CoreError::InvalidParameter("at least one forecasting method is needed".into()));
        }
        if !(self.time_corr.abs() < 1.0 && self.bus_corr.abs() < 1.0) {
            return Err(CoreError::InvalidParameter("correlations must lie in (-1, 1)".into()));
        }
        Ok(())
    }

    /// Covariance of the shared error: `D R D` with `R` the product of the
    /// bus and time correlation patterns.
    pub fn covariance(&self) -> DMatrix<f64> {
        let t_len = self.system.horizon;
        let n = self.base_load.len();
        DMatrix::from_fn(n, n, |a, b| {
            let (ia, ta) = (a / t_len, a % t_len);
            let (ib, tb) = (b / t_len, b % t_len);
            let rb = if ia == ib { 1.0 } else { self.bus_corr };
            let rt = self.time_corr.powi(ta.abs_diff(tb) as i32);
            self.error_sd[a] * self.error_sd[b] * rb * rt
        })
    }
}

/// One generated history: true loads and each method's prediction, per day.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub truth: ProfileTable,
    pub forecasts: Vec<ProfileTable>,
    /// The shared ground-truth errors, `truth − base level`.
    pub shared_errors: Vec<Vec<f64>>,
}

/// Draws `spec.days` days from the spec's distribution.
pub fn synthesize(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticData> {
    spec.validate()?;
    let chol = nalgebra::Cholesky::new(spec.covariance())
        .ok_or_else(|| CoreError::InvalidParameter("error covariance is not positive definite".into()))?;
    let l = chol.l();
    let (nb, nt) = (spec.system.num_buses(), spec.system.horizon);
    let n = nb * nt;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let mut truth = ProfileTable::new(nb, nt);
    let mut forecasts = vec![ProfileTable::new(nb, nt); spec.methods.len()];
    let mut shared_errors = vec![];
    for day in 0..spec.days {
        let level = 1.0 + spec.daily_level_sd * normal();
        let z: Vec<f64> = (0..n).map(|_| normal()).collect();
        let e: Vec<f64> = (0..n).map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum()).collect();
        let actual: Vec<f64> = (0..n).map(|i| level * spec.base_load[i] + e[i]).collect();
        for (m, p) in spec.methods.iter().enumerate() {
            let pred = (0..n).map(|i| actual[i] - e[i] - p.bias - p.noise_sd * normal()).collect();
            forecasts[m].push(day as i64, pred);
        }
        truth.push(day as i64, actual);
        shared_errors.push(e);
    }
    Ok(SyntheticData {
        truth,
        forecasts,
        shared_errors,
    })
}

/// Paths of a case on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFiles {
    pub system: PathBuf,
    pub truth: PathBuf,
    pub forecasts: Vec<PathBuf>,
    pub bounds: PathBuf,
    /// The generating spec, so coverage can be checked against the truth.
    pub spec: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Writes the system JSON, truth and forecast CSVs, the load box and the
/// spec into `dir`.
pub fn generate_synthetic_case(spec: &SyntheticSpec, seed: u64, dir: &Path) -> Result<CaseFiles> {
    let data = synthesize(spec, seed)?;
    std::fs::create_dir_all(dir)?;
    let files = CaseFiles {
        system: dir.join("system.json"),
        truth: dir.join("truth.csv"),
        forecasts: (0..spec.methods.len()).map(|m| dir.join(format!("forecast_{m}.csv"))).collect(),
        bounds: dir.join("bounds.json"),
        spec: dir.join("spec.json"),
    };
    write_atomic(&files.system, spec.system.to_json_string().as_bytes())?;
    write_atomic(&files.truth, data.truth.to_csv_string().as_bytes())?;
    for (path, table) in files.forecasts.iter().zip(&data.forecasts) {
        write_atomic(path, table.to_csv_string().as_bytes())?;
    }
    let bounds = LoadBounds {
        lower: spec.lower.clone(),
        upper: spec.upper.clone(),
    };
    write_atomic(&files.bounds, serde_json::to_string_pretty(&bounds)?.as_bytes())?;
    write_atomic(&files.spec, serde_json::to_string_pretty(spec)?.as_bytes())?;
    Ok(files)
}

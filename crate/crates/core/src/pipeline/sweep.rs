//! Re-running one variant across values of a single setting.

use super::case::Case;
use super::methods::{run_method, run_method_with_weight, RunReport, Variant};
use crate::error::{CoreError, Result};
use crate::surrogate::{weight_samples, SurrogateModel, WeightVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Eps,
    Delta,
    /// Number of size-split days.
    SizeSamples,
    /// Simplex grid of weights; the single value is the grid step.
    WeightGrid,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Eps => "eps",
            SweepParameter::Delta => "delta",
            SweepParameter::SizeSamples => "size_samples",
            SweepParameter::WeightGrid => "weight_grid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [SweepParameter::Eps, SweepParameter::Delta, SweepParameter::SizeSamples, SweepParameter::WeightGrid]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CoreError::InvalidParameter(format!("unknown sweep parameter {s:?}; expected eps, delta, size_samples or weight_grid")))
    }
}

/// One sweep point. Failed points keep their value and carry the error
/// instead of metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub parameter: String,
    /// The swept value; weights are written `w0;w1;…`.
    pub value: String,
    pub objective: Option<f64>,
    pub feasible_rate: Option<f64>,
    pub test_cost: Option<f64>,
    pub points_outside: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn from_result(parameter: SweepParameter, value: String, res: Result<RunReport>) -> Self {
        let mut row = SweepRow {
            parameter: parameter.name().to_string(),
            value,
            objective: None,
            feasible_rate: None,
            test_cost: None,
            points_outside: None,
            error: None,
        };
        match res {
            Ok(r) => {
                row.objective = Some(r.objective);
                row.feasible_rate = Some(r.feasible_rate);
                row.test_cost = Some(r.test_cost);
                row.points_outside = Some(r.points_outside);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    }
}

const HEADER: [&str; 7] = ["parameter", "value", "objective", "feasible_rate", "test_cost", "points_outside", "error"];

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    let f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
    for r in rows {
        w.write_record([
            r.parameter.clone(),
            r.value.clone(),
            f(r.objective),
            f(r.feasible_rate),
            f(r.test_cost),
            f(r.points_outside),
            r.error.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn sweep_from_csv(text: &str, origin: &str) -> Result<Vec<SweepRow>> {
    let err = |line: usize, msg: String| CoreError::Csv {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(err(1, format!("expected header {HEADER:?}")));
    }
    let mut rows = vec![];
    for (k, rec) in r.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| err(line, e.to_string()))?;
        if rec.len() != HEADER.len() {
            return Err(err(line, format!("row has {} fields, expected {}", rec.len(), HEADER.len())));
        }
        let num = |c: usize| -> Result<Option<f64>> {
            let s = rec[c].trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|e| err(line, format!("column {}: {e}", HEADER[c])))
        };
        rows.push(SweepRow {
            parameter: rec[0].to_string(),
            value: rec[1].to_string(),
            objective: num(2)?,
            feasible_rate: num(3)?,
            test_cost: num(4)?,
            points_outside: num(5)?,
            error: (!rec[6].is_empty()).then(|| rec[6].to_string()),
        });
    }
    Ok(rows)
}

fn format_weight(w: &WeightVector) -> String {
    w.0.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";")
}

/// Runs `variant` once per value with everything else held fixed. Points
/// run in parallel; a failing point becomes an error row.
pub fn sweep(case: &Case, variant: Variant, parameter: SweepParameter, values: &[f64], surrogate: Option<&SurrogateModel>) -> Result<Vec<SweepRow>> {
    if parameter == SweepParameter::WeightGrid {
        let [step] = values else {
            return Err(CoreError::InvalidParameter("a weight-grid sweep takes exactly one value, the grid step".into()));
        };
        let weights = weight_samples(case.num_methods(), *step, 0, case.config.seed)?;
        return Ok(weights
            .par_iter()
            .map(|w| SweepRow::from_result(parameter, format_weight(w), run_method_with_weight(case, variant, w)))
            .collect());
    }
    Ok(values
        .par_iter()
        .map(|&v| {
            let res = (|| {
                let mut cfg = case.config.clone();
                match parameter {
                    SweepParameter::Eps => cfg.eps = v,
                    SweepParameter::Delta => cfg.delta = v,
                    SweepParameter::SizeSamples => {
                        if !(v >= 0.0 && v.fract() == 0.0) {
                            return Err(CoreError::InvalidParameter(format!("size-split length {v} is not a count")));
                        }
                        cfg.splits.size = v as usize;
                    }
                    SweepParameter::WeightGrid => unreachable!("handled above"),
                }
                run_method(&case.reconfigure(cfg)?, variant, surrogate)
            })();
            SweepRow::from_result(parameter, format!("{v}"), res)
        })
        .collect())
}

//! Problem representation shared by the LP and MILP drivers.

use crate::error::MilpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// A single linear constraint `Σ coeffs · x  (sense)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Row {
    pub fn new(name: impl Into<String>, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> Self {
        Row {
            name: name.into(),
            coeffs: normalize_coeffs(coeffs),
            sense,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            RowSense::Le => (act - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - act).max(0.0),
            RowSense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Sorts by column, merges duplicates and drops exact zeros.
fn normalize_coeffs(mut coeffs: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    coeffs.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
    for (j, a) in coeffs {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

/// A linear or mixed-binary program with bounded variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub name: String,
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub kinds: Vec<VarKind>,
    pub var_names: Vec<String>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            name: "lp".into(),
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            kinds: Vec::new(),
            var_names: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.push_var(name.into(), lower, upper, cost, VarKind::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> usize {
        self.push_var(name.into(), 0.0, 1.0, cost, VarKind::Binary)
    }

    fn push_var(&mut self, name: String, lower: f64, upper: f64, cost: f64, kind: VarKind) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.kinds.push(kind);
        self.var_names.push(name);
        self.objective.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        self.rows.push(Row::new(name, coeffs, sense, rhs));
        self.rows.len() - 1
    }

    pub fn push_row(&mut self, row: Row) -> usize {
        self.rows.push(Row::new(row.name, row.coeffs, row.sense, row.rhs));
        self.rows.len() - 1
    }

    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == VarKind::Binary)
            .map(|(j, _)| j)
    }

    pub fn is_mip(&self) -> bool {
        self.kinds.iter().any(|k| *k == VarKind::Binary)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
        let bounds = (0..self.num_vars())
            .map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.kinds.len() != n || self.var_names.len() != n {
            return Err(MilpError::Dimension(format!(
                "variable arrays disagree: objective {n}, lower {}, upper {}, kinds {}",
                self.lower.len(),
                self.upper.len(),
                self.kinds.len()
            )));
        }
        for j in 0..n {
            if self.objective[j].is_nan() || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(MilpError::NotFinite(format!("variable {}", self.var_names[j])));
            }
            if self.lower[j] > self.upper[j] {
                return Err(MilpError::Bounds(format!(
                    "{}: lower {} > upper {}",
                    self.var_names[j], self.lower[j], self.upper[j]
                )));
            }
            if self.kinds[j] == VarKind::Binary && !(self.lower[j].is_finite() && self.upper[j].is_finite()) {
                return Err(MilpError::Bounds(format!("binary {} needs finite bounds", self.var_names[j])));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(MilpError::NotFinite(format!("rhs of row {}", r.name)));
            }
            for &(j, a) in &r.coeffs {
                if j >= n {
                    return Err(MilpError::Dimension(format!("row {} references column {j} of {n}", r.name)));
                }
                if !a.is_finite() {
                    return Err(MilpError::NotFinite(format!("coefficient in row {}", r.name)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Outcome of an LP or MILP solve. Objective and duals refer to the
/// problem's own sense.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: Status,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// Row duals, `∂objective/∂rhs`. Empty for MILP solves.
    pub duals: Vec<f64>,
    /// Relative gap between incumbent and best bound (0 for LPs).
    pub gap: f64,
    pub best_bound: f64,
    pub nodes: usize,
    pub iterations: usize,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub(crate) fn empty(status: Status, sense: Sense) -> Self {
        let objective = match (status, sense) {
            (Status::Infeasible, Sense::Minimize) | (Status::Unbounded, Sense::Maximize) => f64::INFINITY,
            (Status::Infeasible, Sense::Maximize) | (Status::Unbounded, Sense::Minimize) => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        SolveReport {
            status,
            objective,
            primal: Vec::new(),
            duals: Vec::new(),
            gap: f64::INFINITY,
            best_bound: objective,
            nodes: 0,
            iterations: 0,
        }
    }
}

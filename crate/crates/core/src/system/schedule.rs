use super::PowerSystem;
use serde::{Deserialize, Serialize};

/// First-stage decisions, each indexed `[generator][period]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitmentSchedule {
    pub theta: Vec<Vec<f64>>,
    pub start: Vec<Vec<f64>>,
    pub stop: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub r_up: Vec<Vec<f64>>,
    pub r_down: Vec<Vec<f64>>,
}

impl CommitmentSchedule {
    pub fn zeros(gens: usize, periods: usize) -> Self {
        let z = vec![vec![0.0; periods]; gens];
        CommitmentSchedule {
            theta: z.clone(),
            start: z.clone(),
            stop: z.clone(),
            p: z.clone(),
            r_up: z.clone(),
            r_down: z,
        }
    }

    pub fn num_gens(&self) -> usize {
        self.p.len()
    }

    pub fn num_periods(&self) -> usize {
        self.p.first().map_or(0, Vec::len)
    }

    /// Fills startup/shutdown indicators from `theta` and the initial states.
    pub fn derive_transitions(&mut self, theta0: &[u8]) {
        for (g, row) in self.theta.iter().enumerate() {
            let mut prev = theta0[g] as f64;
            for (t, &on) in row.iter().enumerate() {
                self.start[g][t] = (on - prev).max(0.0);
                self.stop[g][t] = (prev - on).max(0.0);
                prev = on;
            }
        }
    }
}

/// Second-stage output adjustments, indexed `[generator][period]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedispatchPlan {
    pub up: Vec<Vec<f64>>,
    pub down: Vec<Vec<f64>>,
}

impl RedispatchPlan {
    pub fn zeros(gens: usize, periods: usize) -> Self {
        RedispatchPlan {
            up: vec![vec![0.0; periods]; gens],
            down: vec![vec![0.0; periods]; gens],
        }
    }
}

/// A violated constraint and by how much.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub residual: f64,
}

pub fn predispatch_cost(sys: &PowerSystem, x: &CommitmentSchedule) -> f64 {
    let mut total = 0.0;
    for (g, gen) in sys.generators.iter().enumerate() {
        for t in 0..sys.horizon {
            total += gen.o_plus * x.start[g][t]
                + gen.o_minus * x.stop[g][t]
                + gen.rho * x.p[g][t]
                + gen.gamma_plus * x.r_up[g][t]
                + gen.gamma_minus * x.r_down[g][t];
        }
    }
    total
}

pub fn redispatch_cost(sys: &PowerSystem, y: &RedispatchPlan) -> f64 {
    let mut total = 0.0;
    for (g, gen) in sys.generators.iter().enumerate() {
        for t in 0..sys.horizon {
            total += gen.rho_plus * y.up[g][t] + gen.rho_minus * y.down[g][t];
        }
    }
    total
}

/// Ramp limits evaluated on the re-dispatched trajectory `p + p⁺ − p⁻`,
/// periods 2..T, with absolute tolerance 1e-6 MW.
pub fn check_ramp_feasibility(sys: &PowerSystem, x: &CommitmentSchedule, y: &RedispatchPlan) -> Vec<Violation> {
    let mut out = Vec::new();
    for (g, gen) in sys.generators.iter().enumerate() {
        let out_at = |t: usize| x.p[g][t] + y.up[g][t] - y.down[g][t];
        for t in 1..sys.horizon {
            let rise = out_at(t) - out_at(t - 1);
            let up_lim = gen.k_plus * x.theta[g][t - 1] + gen.k_up * x.start[g][t];
            let down_lim = gen.k_minus * x.theta[g][t] + gen.k_down * x.stop[g][t];
            if rise - up_lim > 1e-6 {
                out.push(Violation {
                    constraint: format!("ramp_up[{g},{t}]"),
                    residual: rise - up_lim,
                });
            }
            if -rise - down_lim > 1e-6 {
                out.push(Violation {
                    constraint: format!("ramp_down[{g},{t}]"),
                    residual: -rise - down_lim,
                });
            }
        }
    }
    out
}

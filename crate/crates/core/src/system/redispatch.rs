use super::schedule::{CommitmentSchedule, RedispatchPlan};
use super::PowerSystem;
use ruc_milp::{solve_lp, LinearProgram, RowSense, Sense, Status};

/// Column positions of the second-stage variables: all p⁺ then all p⁻,
/// generator-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RedispatchIndex {
    pub gens: usize,
    pub periods: usize,
    pub offset: usize,
}

impl RedispatchIndex {
    pub fn len(&self) -> usize {
        2 * self.gens * self.periods
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn up(&self, g: usize, t: usize) -> usize {
        self.offset + g * self.periods + t
    }

    pub fn down(&self, g: usize, t: usize) -> usize {
        self.offset + (self.gens + g) * self.periods + t
    }

    pub fn read(&self, v: &[f64]) -> RedispatchPlan {
        let mut y = RedispatchPlan::zeros(self.gens, self.periods);
        for g in 0..self.gens {
            for t in 0..self.periods {
                y.up[g][t] = v[self.up(g, t)].max(0.0);
                y.down[g][t] = v[self.down(g, t)].max(0.0);
            }
        }
        y
    }

    pub fn write(&self, y: &RedispatchPlan, v: &mut [f64]) {
        for g in 0..self.gens {
            for t in 0..self.periods {
                v[self.up(g, t)] = y.up[g][t];
                v[self.down(g, t)] = y.down[g][t];
            }
        }
    }
}

/// The re-dispatch LP for a fixed schedule and net-load realization, written
/// directly from the network equations: balance as equalities, line limits
/// as two rows, and reserves as column bounds.
pub fn recourse_lp(sys: &PowerSystem, x: &CommitmentSchedule, load: &[f64]) -> (LinearProgram, RedispatchIndex) {
    let (ng, nt) = (sys.num_gens(), sys.horizon);
    let idx = RedispatchIndex {
        gens: ng,
        periods: nt,
        offset: 0,
    };
    let mut lp = LinearProgram::new(Sense::Minimize).with_name("redispatch");
    for (g, gen) in sys.generators.iter().enumerate() {
        for t in 0..nt {
            lp.add_var(format!("pup[{g},{t}]"), 0.0, x.r_up[g][t].max(0.0), gen.rho_plus);
        }
    }
    for (g, gen) in sys.generators.iter().enumerate() {
        for t in 0..nt {
            lp.add_var(format!("pdn[{g},{t}]"), 0.0, x.r_down[g][t].max(0.0), gen.rho_minus);
        }
    }
    for t in 0..nt {
        let scheduled: f64 = (0..ng).map(|g| x.p[g][t]).sum();
        let mut coeffs = Vec::with_capacity(2 * ng);
        for g in 0..ng {
            coeffs.push((idx.up(g, t), 1.0));
            coeffs.push((idx.down(g, t), -1.0));
        }
        lp.add_row(format!("balance[{t}]"), coeffs, RowSense::Eq, sys.period_load(load, t) - scheduled);
    }
    for (l, line) in sys.lines.iter().enumerate() {
        for t in 0..nt {
            let mut base = -(0..sys.num_buses()).map(|i| sys.ptdf.bus[l][i] * load[sys.load_index(i, t)]).sum::<f64>();
            let mut coeffs = Vec::with_capacity(2 * ng);
            for g in 0..ng {
                let pi = sys.ptdf.gen[l][g];
                base += pi * x.p[g][t];
                coeffs.push((idx.up(g, t), pi));
                coeffs.push((idx.down(g, t), -pi));
            }
            lp.add_row(format!("flow_hi[{l},{t}]"), coeffs.clone(), RowSense::Le, line.capacity - base);
            lp.add_row(format!("flow_lo[{l},{t}]"), coeffs, RowSense::Ge, -line.capacity - base);
        }
    }
    (lp, idx)
}

/// Cheapest re-dispatch for `load`, or `None` when no adjustment within the
/// scheduled reserves restores balance and line limits.
pub fn recourse_value(sys: &PowerSystem, x: &CommitmentSchedule, load: &[f64]) -> Option<(f64, RedispatchPlan)> {
    let (lp, idx) = recourse_lp(sys, x, load);
    let rep = solve_lp(&lp);
    match rep.status {
        Status::Optimal => Some((rep.objective, idx.read(&rep.primal))),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn cheapest_unit_covers_shortfall() {
        let sys = single_bus(vec![generator(1, 0.0, 100.0, 10.0), generator(1, 0.0, 100.0, 30.0)], 1);
        let mut x = CommitmentSchedule::zeros(2, 1);
        x.theta = vec![vec![1.0], vec![1.0]];
        x.p = vec![vec![30.0], vec![20.0]];
        x.r_up = vec![vec![5.0], vec![10.0]];
        // 8 MW short: 5 from unit 0 at 15 $/MWh, 3 from unit 1 at 35 $/MWh
        let (v, y) = recourse_value(&sys, &x, &[58.0]).unwrap();
        assert!((v - (5.0 * 15.0 + 3.0 * 35.0)).abs() < 1e-9);
        assert!((y.up[0][0] - 5.0).abs() < 1e-9);
        assert!(recourse_value(&sys, &x, &[66.0]).is_none());
    }
}

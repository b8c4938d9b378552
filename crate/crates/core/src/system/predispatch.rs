use super::schedule::{CommitmentSchedule, Violation};
use super::PowerSystem;
use crate::error::Result;
use ruc_milp::{LinearProgram, RowSense, Sense};

/// Column positions of the first-stage variables inside a larger program.
/// Blocks are laid out as θ, θ⁺, θ⁻, p, r⁺, r⁻, each generator-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleIndex {
    pub gens: usize,
    pub periods: usize,
    pub offset: usize,
}

impl ScheduleIndex {
    pub const BLOCKS: usize = 6;

    pub fn len(&self) -> usize {
        Self::BLOCKS * self.gens * self.periods
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn at(&self, block: usize, g: usize, t: usize) -> usize {
        self.offset + (block * self.gens + g) * self.periods + t
    }

    pub fn theta(&self, g: usize, t: usize) -> usize {
        self.at(0, g, t)
    }
    pub fn start(&self, g: usize, t: usize) -> usize {
        self.at(1, g, t)
    }
    pub fn stop(&self, g: usize, t: usize) -> usize {
        self.at(2, g, t)
    }
    pub fn p(&self, g: usize, t: usize) -> usize {
        self.at(3, g, t)
    }
    pub fn r_up(&self, g: usize, t: usize) -> usize {
        self.at(4, g, t)
    }
    pub fn r_down(&self, g: usize, t: usize) -> usize {
        self.at(5, g, t)
    }

    /// Reads a schedule out of a solution vector, rounding the binaries.
    pub fn read(&self, v: &[f64]) -> CommitmentSchedule {
        let mut x = CommitmentSchedule::zeros(self.gens, self.periods);
        for g in 0..self.gens {
            for t in 0..self.periods {
                x.theta[g][t] = v[self.theta(g, t)].round();
                x.start[g][t] = v[self.start(g, t)].round();
                x.stop[g][t] = v[self.stop(g, t)].round();
                x.p[g][t] = v[self.p(g, t)];
                x.r_up[g][t] = v[self.r_up(g, t)].max(0.0);
                x.r_down[g][t] = v[self.r_down(g, t)].max(0.0);
            }
        }
        x
    }

    pub fn write(&self, x: &CommitmentSchedule, v: &mut [f64]) {
        for g in 0..self.gens {
            for t in 0..self.periods {
                v[self.theta(g, t)] = x.theta[g][t];
                v[self.start(g, t)] = x.start[g][t];
                v[self.stop(g, t)] = x.stop[g][t];
                v[self.p(g, t)] = x.p[g][t];
                v[self.r_up(g, t)] = x.r_up[g][t];
                v[self.r_down(g, t)] = x.r_down[g][t];
            }
        }
    }
}

/// The pre-dispatch feasible set for one net-load forecast, with the
/// pre-dispatch cost as objective.
#[derive(Debug, Clone)]
pub struct PredispatchModel {
    pub lp: LinearProgram,
    pub index: ScheduleIndex,
}

pub fn build_predispatch_constraints(sys: &PowerSystem, load: &[f64]) -> Result<PredispatchModel> {
    let mut lp = LinearProgram::new(Sense::Minimize).with_name("predispatch");
    let index = add_predispatch(&mut lp, sys, load)?;
    Ok(PredispatchModel { lp, index })
}

/// Appends the first-stage variables and every constraint of the
/// pre-dispatch set to `lp`; objective coefficients are the pre-dispatch
/// costs.
pub fn add_predispatch(lp: &mut LinearProgram, sys: &PowerSystem, load: &[f64]) -> Result<ScheduleIndex> {
    sys.validate()?;
    sys.check_load(load)?;
    let (ng, nt) = (sys.num_gens(), sys.horizon);
    let idx = ScheduleIndex {
        gens: ng,
        periods: nt,
        offset: lp.num_vars(),
    };
    for (name, block) in [("theta", 0), ("start", 1), ("stop", 2)] {
        for (g, gen) in sys.generators.iter().enumerate() {
            let cost = [0.0, gen.o_plus, gen.o_minus][block];
            for t in 0..nt {
                lp.add_binary(format!("{name}[{g},{t}]"), cost);
            }
        }
    }
    for (g, gen) in sys.generators.iter().enumerate() {
        for t in 0..nt {
            lp.add_var(format!("p[{g},{t}]"), 0.0, gen.p_max, gen.rho);
        }
    }
    for (g, gen) in sys.generators.iter().enumerate() {
        for t in 0..nt {
            lp.add_var(format!("rup[{g},{t}]"), 0.0, gen.r_plus_max, gen.gamma_plus);
        }
    }
    for (g, gen) in sys.generators.iter().enumerate() {
        for t in 0..nt {
            lp.add_var(format!("rdn[{g},{t}]"), 0.0, gen.r_minus_max, gen.gamma_minus);
        }
    }

    for t in 0..nt {
        let coeffs = (0..ng).map(|g| (idx.p(g, t), 1.0)).collect();
        lp.add_row(format!("balance[{t}]"), coeffs, RowSense::Eq, sys.period_load(load, t));
    }
    for (l, line) in sys.lines.iter().enumerate() {
        for t in 0..nt {
            let bus_flow: f64 = (0..sys.num_buses()).map(|i| sys.ptdf.bus[l][i] * load[sys.load_index(i, t)]).sum();
            let coeffs: Vec<(usize, f64)> = (0..ng).map(|g| (idx.p(g, t), sys.ptdf.gen[l][g])).collect();
            lp.add_row(format!("flow_hi[{l},{t}]"), coeffs.clone(), RowSense::Le, line.capacity + bus_flow);
            lp.add_row(format!("flow_lo[{l},{t}]"), coeffs, RowSense::Ge, -line.capacity + bus_flow);
        }
    }
    for (g, gen) in sys.generators.iter().enumerate() {
        let tu = gen.t_up;
        let td = gen.t_down;
        // minimum up time: a startup at t keeps the unit on for tu periods,
        // or until the end of the horizon
        for t in 0..nt {
            let end = (t + tu).min(nt);
            let len = (end - t) as f64;
            let mut coeffs: Vec<(usize, f64)> = (t..end).map(|tau| (idx.theta(g, tau), 1.0)).collect();
            coeffs.push((idx.start(g, t), -len));
            lp.add_row(format!("min_up[{g},{t}]"), coeffs, RowSense::Ge, 0.0);
        }
        for t in 0..nt {
            let end = (t + td).min(nt);
            let len = (end - t) as f64;
            let mut coeffs: Vec<(usize, f64)> = (t..end).map(|tau| (idx.theta(g, tau), -1.0)).collect();
            coeffs.push((idx.stop(g, t), -len));
            lp.add_row(format!("min_down[{g},{t}]"), coeffs, RowSense::Ge, -len);
        }
        for t in 0..nt {
            let mut coeffs = vec![(idx.theta(g, t), 1.0), (idx.start(g, t), -1.0), (idx.stop(g, t), 1.0)];
            let rhs = if t == 0 {
                gen.theta0 as f64
            } else {
                coeffs.push((idx.theta(g, t - 1), -1.0));
                0.0
            };
            lp.add_row(format!("transition[{g},{t}]"), coeffs, RowSense::Eq, rhs);
            lp.add_row(
                format!("one_change[{g},{t}]"),
                vec![(idx.start(g, t), 1.0), (idx.stop(g, t), 1.0)],
                RowSense::Le,
                1.0,
            );
        }
        for t in 0..nt {
            let th = idx.theta(g, t);
            lp.add_row(
                format!("reserve_up_cap[{g},{t}]"),
                vec![(idx.r_up(g, t), 1.0), (th, -gen.r_plus_max)],
                RowSense::Le,
                0.0,
            );
            lp.add_row(
                format!("reserve_down_cap[{g},{t}]"),
                vec![(idx.r_down(g, t), 1.0), (th, -gen.r_minus_max)],
                RowSense::Le,
                0.0,
            );
            lp.add_row(
                format!("output_min[{g},{t}]"),
                vec![(idx.p(g, t), 1.0), (th, -gen.p_min), (idx.r_down(g, t), -1.0)],
                RowSense::Ge,
                0.0,
            );
            lp.add_row(
                format!("output_max[{g},{t}]"),
                vec![(idx.p(g, t), 1.0), (th, -gen.p_max), (idx.r_up(g, t), 1.0)],
                RowSense::Le,
                0.0,
            );
        }
        for t in 1..nt {
            lp.add_row(
                format!("ramp_up[{g},{t}]"),
                vec![
                    (idx.p(g, t), 1.0),
                    (idx.r_up(g, t), 1.0),
                    (idx.p(g, t - 1), -1.0),
                    (idx.r_down(g, t - 1), 1.0),
                    (idx.theta(g, t - 1), -gen.k_plus),
                    (idx.start(g, t), -gen.k_up),
                ],
                RowSense::Le,
                0.0,
            );
            lp.add_row(
                format!("ramp_down[{g},{t}]"),
                vec![
                    (idx.p(g, t), -1.0),
                    (idx.r_down(g, t), 1.0),
                    (idx.p(g, t - 1), 1.0),
                    (idx.r_up(g, t - 1), 1.0),
                    (idx.theta(g, t), -gen.k_minus),
                    (idx.stop(g, t), -gen.k_down),
                ],
                RowSense::Le,
                0.0,
            );
        }
    }
    Ok(idx)
}

/// Every constraint of the pre-dispatch set that `x` violates by more than
/// 1e-6, including bounds and integrality.
pub fn validate_schedule(sys: &PowerSystem, load: &[f64], x: &CommitmentSchedule) -> Result<Vec<Violation>> {
    let model = build_predispatch_constraints(sys, load)?;
    if x.num_gens() != sys.num_gens() || x.num_periods() != sys.horizon {
        return Err(crate::error::CoreError::Dimension("schedule shape".into()));
    }
    let mut v = vec![0.0; model.lp.num_vars()];
    model.index.write(x, &mut v);
    let lp = &model.lp;
    let mut out = Vec::new();
    for j in 0..lp.num_vars() {
        let below = lp.lower[j] - v[j];
        let above = v[j] - lp.upper[j];
        let frac = if lp.kinds[j] == ruc_milp::VarKind::Binary {
            (v[j] - v[j].round()).abs()
        } else {
            0.0
        };
        let residual = below.max(above).max(frac);
        if residual > 1e-6 {
            out.push(Violation {
                constraint: format!("bound:{}", lp.var_names[j]),
                residual,
            });
        }
    }
    for row in &lp.rows {
        let residual = row.violation(&v);
        if residual > 1e-6 {
            out.push(Violation {
                constraint: row.name.clone(),
                residual,
            });
        }
    }
    Ok(out)
}

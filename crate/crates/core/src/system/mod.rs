//! Static grid description and the unit-commitment constraint systems built
//! from it.
//!
//! Net loads are stored flat, bus-major: entry `bus * T + t` is the net load
//! of the bus at position `bus` in [`PowerSystem::buses`] during period `t`.
//! Wind enters as negative load at its bus.

mod compact;
mod network;
mod predispatch;
mod redispatch;
mod schedule;

pub use compact::{CompactRowKind, CompactTwoStage};
pub use network::ptdf_from_reactances;
pub use predispatch::{add_predispatch, build_predispatch_constraints, validate_schedule, PredispatchModel, ScheduleIndex};
pub use redispatch::{recourse_lp, recourse_value, RedispatchIndex};
pub use schedule::{check_ramp_feasibility, predispatch_cost, redispatch_cost, CommitmentSchedule, RedispatchPlan, Violation};

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    /// Startup and shutdown costs ($).
    pub o_plus: f64,
    pub o_minus: f64,
    /// Energy cost ($/MWh).
    pub rho: f64,
    /// Upward and downward reserve costs ($/MW).
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// Re-dispatch adjustment costs ($/MWh).
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub r_plus_max: f64,
    pub r_minus_max: f64,
    /// Ramp limits while running, and at startup/shutdown (MW/h).
    pub k_plus: f64,
    pub k_minus: f64,
    pub k_up: f64,
    pub k_down: f64,
    /// Minimum up and down times (h).
    pub t_up: usize,
    pub t_down: usize,
    /// Commitment state before the first period.
    #[serde(default)]
    pub theta0: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
}

/// Power transfer distribution factors, one row per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ptdf {
    /// `gen[l][g]`: flow on line `l` per MW injected by generator `g`.
    pub gen: Vec<Vec<f64>>,
    /// `bus[l][i]`: flow on line `l` per MW withdrawn at bus `i`.
    pub bus: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSystem {
    pub horizon: usize,
    pub buses: Vec<usize>,
    pub generators: Vec<Generator>,
    pub lines: Vec<Line>,
    pub ptdf: Ptdf,
}

impl PowerSystem {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let sys: PowerSystem = serde_json::from_str(text)?;
        sys.validate()?;
        Ok(sys)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }

    pub fn num_gens(&self) -> usize {
        self.generators.len()
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    /// Length of a flattened net-load vector.
    pub fn load_dim(&self) -> usize {
        self.buses.len() * self.horizon
    }

    pub fn load_index(&self, bus: usize, t: usize) -> usize {
        bus * self.horizon + t
    }

    /// Total net load of period `t`.
    pub fn period_load(&self, load: &[f64], t: usize) -> f64 {
        (0..self.num_buses()).map(|i| load[self.load_index(i, t)]).sum()
    }

    pub fn check_load(&self, load: &[f64]) -> Result<()> {
        if load.len() != self.load_dim() {
            return Err(CoreError::Dimension(format!(
                "net load has {} entries, expected {} buses x {} periods",
                load.len(),
                self.num_buses(),
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CoreError::InvalidSystem(m));
        let t = self.horizon;
        if t == 0 {
            return bad("horizon must be at least one period".into());
        }
        if self.buses.is_empty() {
            return bad("no buses".into());
        }
        let mut ids = self.buses.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.buses.len() {
            return bad("duplicate bus ids".into());
        }
        for (g, gen) in self.generators.iter().enumerate() {
            if !self.buses.contains(&gen.bus) {
                return bad(format!("generator {g} sits on unknown bus {}", gen.bus));
            }
            let costs = [gen.o_plus, gen.o_minus, gen.rho, gen.gamma_plus, gen.gamma_minus, gen.rho_plus, gen.rho_minus];
            if costs.iter().any(|c| !c.is_finite() || *c < 0.0) {
                return bad(format!("generator {g} has a negative or non-finite cost"));
            }
            if !(0.0 <= gen.p_min && gen.p_min <= gen.p_max && gen.p_max.is_finite()) {
                return bad(format!("generator {g} needs 0 <= p_min <= p_max"));
            }
            let limits = [gen.r_plus_max, gen.r_minus_max, gen.k_plus, gen.k_minus, gen.k_up, gen.k_down];
            if limits.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return bad(format!("generator {g} has a negative reserve or ramp limit"));
            }
            if gen.t_up < 1 || gen.t_up > t || gen.t_down < 1 || gen.t_down > t {
                return bad(format!(
                    "generator {g}: minimum up/down times ({}, {}) must lie in 1..={t}",
                    gen.t_up, gen.t_down
                ));
            }
            if gen.theta0 > 1 {
                return bad(format!("generator {g}: theta0 must be 0 or 1"));
            }
        }
        for (l, line) in self.lines.iter().enumerate() {
            if !self.buses.contains(&line.from) || !self.buses.contains(&line.to) {
                return bad(format!("line {l} connects an unknown bus"));
            }
            if !(line.capacity > 0.0) {
                return bad(format!("line {l} needs a positive capacity"));
            }
        }
        if self.ptdf.gen.len() != self.lines.len() || self.ptdf.bus.len() != self.lines.len() {
            return bad(format!(
                "ptdf has {}/{} rows for {} lines",
                self.ptdf.gen.len(),
                self.ptdf.bus.len(),
                self.lines.len()
            ));
        }
        for l in 0..self.lines.len() {
            if self.ptdf.gen[l].len() != self.generators.len() || self.ptdf.bus[l].len() != self.buses.len() {
                return bad(format!("ptdf row {l} does not match generator/bus counts"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn generator(bus: usize, p_min: f64, p_max: f64, rho: f64) -> Generator {
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

    pub fn single_bus(gens: Vec<Generator>, horizon: usize) -> PowerSystem {
        PowerSystem {
            horizon,
            buses: vec![1],
            generators: gens,
            lines: vec![],
            ptdf: Ptdf { gen: vec![], bus: vec![] },
        }
    }

    /// Three buses in a triangle with equal reactances, generators at buses
    /// 1 and 2, slack at bus 1.
    pub fn triangle(horizon: usize, capacity: f64) -> PowerSystem {
        let buses = vec![1, 2, 3];
        let lines = vec![
            Line { from: 1, to: 2, capacity },
            Line { from: 2, to: 3, capacity },
            Line { from: 1, to: 3, capacity },
        ];
        let x = vec![0.1; 3];
        let gens = vec![generator(1, 20.0, 150.0, 20.0), generator(2, 0.0, 80.0, 35.0)];
        let gen_bus: Vec<usize> = gens.iter().map(|g| g.bus).collect();
        let ptdf = ptdf_from_reactances(&buses, &lines, &x, &gen_bus, 0).unwrap();
        PowerSystem { horizon, buses, generators: gens, lines, ptdf }
    }
}

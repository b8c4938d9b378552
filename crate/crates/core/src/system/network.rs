use super::{Line, Ptdf};
use crate::error::{CoreError, Result};
use nalgebra::DMatrix;

/// DC power-flow distribution factors from line reactances, with the bus at
/// position `slack` absorbing all imbalances.
pub fn ptdf_from_reactances(buses: &[usize], lines: &[Line], reactance: &[f64], gen_bus: &[usize], slack: usize) -> Result<Ptdf> {
    let n = buses.len();
    if reactance.len() != lines.len() || slack >= n {
        return Err(CoreError::Dimension("reactances or slack position".into()));
    }
    let pos = |id: usize| {
        buses
            .iter()
            .position(|&b| b == id)
            .ok_or_else(|| CoreError::InvalidSystem(format!("unknown bus {id}")))
    };
    let mut b = DMatrix::<f64>::zeros(n, n);
    let mut ends = Vec::with_capacity(lines.len());
    for (line, &x) in lines.iter().zip(reactance) {
        if !(x > 0.0) {
            return Err(CoreError::InvalidSystem("line reactance must be positive".into()));
        }
        let (f, t) = (pos(line.from)?, pos(line.to)?);
        b[(f, f)] += 1.0 / x;
        b[(t, t)] += 1.0 / x;
        b[(f, t)] -= 1.0 / x;
        b[(t, f)] -= 1.0 / x;
        ends.push((f, t));
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let reduced = DMatrix::from_fn(n - 1, n - 1, |r, c| b[(keep[r], keep[c])]);
    let inv = reduced
        .try_inverse()
        .ok_or_else(|| CoreError::InvalidSystem("network is not connected".into()))?;
    // angle sensitivity of each bus to an injection at each bus
    let mut x_inj = DMatrix::<f64>::zeros(n, n);
    for (r, &i) in keep.iter().enumerate() {
        for (c, &j) in keep.iter().enumerate() {
            x_inj[(i, j)] = inv[(r, c)];
        }
    }
    let h: Vec<Vec<f64>> = ends
        .iter()
        .zip(reactance)
        .map(|(&(f, t), &x)| (0..n).map(|k| (x_inj[(f, k)] - x_inj[(t, k)]) / x).collect())
        .collect();
    let gen = h
        .iter()
        .map(|row| gen_bus.iter().map(|&gb| pos(gb).map(|k| row[k])).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(Ptdf { gen, bus: h })
}

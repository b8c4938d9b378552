//! Independent reference solvers for small problems: LP by enumerating
//! every basic solution of the constraint system, MILP by enumerating every
//! binary pattern on top of that.
#![allow(dead_code)]

use rand::Rng;
use ruc_milp::{LinearProgram, RowSense, Sense, VarKind};

/// Dense Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Constraint `a·x (≤|=) b` in the oracle's own representation.
struct Half {
    a: Vec<f64>,
    b: f64,
    eq: bool,
}

fn halves(lp: &LinearProgram, lower: &[f64], upper: &[f64], cols: &[usize]) -> Vec<Half> {
    let n = cols.len();
    let pos = |j: usize| cols.iter().position(|&c| c == j);
    let mut out = Vec::new();
    for row in &lp.rows {
        let mut a = vec![0.0; n];
        let mut fixed = 0.0;
        for &(j, v) in &row.coeffs {
            match pos(j) {
                Some(k) => a[k] += v,
                None => fixed += v * lower[j],
            }
        }
        let rhs = row.rhs - fixed;
        match row.sense {
            RowSense::Le => out.push(Half { a, b: rhs, eq: false }),
            RowSense::Ge => out.push(Half {
                a: a.iter().map(|v| -v).collect(),
                b: -rhs,
                eq: false,
            }),
            RowSense::Eq => out.push(Half { a, b: rhs, eq: true }),
        }
    }
    for (k, &j) in cols.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        out.push(Half {
            a: e.clone(),
            b: upper[j],
            eq: false,
        });
        out.push(Half {
            a: e.iter().map(|v| -v).collect(),
            b: -lower[j],
            eq: false,
        });
    }
    out
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Optimum over the continuous columns `cols` (others fixed at their lower
/// bound, which callers set equal to the upper bound). Box-bounded only.
/// Returns `None` when infeasible.
pub fn vertex_enumeration(lp: &LinearProgram, lower: &[f64], upper: &[f64], cols: &[usize]) -> Option<f64> {
    let hs = halves(lp, lower, upper, cols);
    let n = cols.len();
    let fixed_obj: f64 = (0..lp.num_vars())
        .filter(|j| !cols.contains(j))
        .map(|j| lp.objective[j] * lower[j])
        .sum();
    let sign = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let feasible = |x: &[f64]| {
        hs.iter().all(|h| {
            let act: f64 = h.a.iter().zip(x).map(|(a, v)| a * v).sum();
            let tol = 1e-9 * (1.0 + h.b.abs());
            if h.eq {
                (act - h.b).abs() <= tol
            } else {
                act <= h.b + tol
            }
        })
    };
    if n == 0 {
        return feasible(&[]).then_some(fixed_obj);
    }
    let mut best: Option<f64> = None;
    combinations(hs.len(), n, &mut |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| hs[i].a.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| hs[i].b).collect();
        if let Some(x) = solve_dense(a, b) {
            if feasible(&x) {
                let v: f64 = cols.iter().zip(&x).map(|(&j, v)| lp.objective[j] * v).sum::<f64>() + fixed_obj;
                if best.is_none_or(|b| sign * v < sign * b) {
                    best = Some(v);
                }
            }
        }
    });
    best
}

/// Exhaustive MILP optimum: every binary pattern, continuous part by vertex
/// enumeration.
pub fn brute_force_milp(lp: &LinearProgram) -> Option<f64> {
    let bins: Vec<usize> = lp.binaries().collect();
    let conts: Vec<usize> = (0..lp.num_vars()).filter(|&j| lp.kinds[j] == VarKind::Continuous).collect();
    let sign = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << bins.len()) {
        let mut lo = lp.lower.clone();
        let mut hi = lp.upper.clone();
        for (k, &j) in bins.iter().enumerate() {
            let v = ((mask >> k) & 1) as f64;
            lo[j] = v;
            hi[j] = v;
        }
        if let Some(v) = vertex_enumeration(lp, &lo, &hi, &conts) {
            if best.is_none_or(|b| sign * v < sign * b) {
                best = Some(v);
            }
        }
    }
    best
}

/// Random box-bounded LP whose rows are satisfied by a hidden point, plus
/// the occasional row that may cut it off.
pub fn random_lp<R: Rng>(rng: &mut R, n: usize, m: usize) -> LinearProgram {
    let sense = if rng.random_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let mut lp = LinearProgram::new(sense);
    let mut hidden = Vec::new();
    for j in 0..n {
        let lo = rng.random_range(-5..=0) as f64;
        let hi = lo + rng.random_range(1..=8) as f64;
        lp.add_var(format!("x{j}"), lo, hi, rng.random_range(-6..=6) as f64);
        hidden.push(rng.random_range(lo..hi));
    }
    for i in 0..m {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.7) {
                coeffs.push((j, rng.random_range(-4..=4) as f64));
            }
        }
        let act: f64 = coeffs.iter().map(|&(j, a)| a * hidden[j]).sum();
        let (sense, rhs) = match rng.random_range(0..10) {
            0 => (RowSense::Eq, act.round()),
            1..=4 => (RowSense::Le, (act + rng.random_range(0.0..3.0)).round()),
            _ => (RowSense::Ge, (act - rng.random_range(0.0..3.0)).round()),
        };
        lp.add_row(format!("c{i}"), coeffs, sense, rhs);
    }
    lp
}

/// Random MILP with `nb` binaries and `nc` continuous columns.
pub fn random_milp<R: Rng>(rng: &mut R, nb: usize, nc: usize, m: usize) -> LinearProgram {
    let mut lp = random_lp(rng, nb + nc, m);
    for j in 0..nb {
        lp.kinds[j] = VarKind::Binary;
        lp.lower[j] = 0.0;
        lp.upper[j] = 1.0;
        lp.var_names[j] = format!("b{j}");
    }
    lp
}

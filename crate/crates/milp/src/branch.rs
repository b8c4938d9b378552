//! Best-bound branch and bound over binary variables.
//!
//! Node LPs are warm-started from the parent's final basis. Integer-feasible
//! node solutions are polished (binaries fixed to their rounded values and
//! the LP re-solved) and then offered to the lazy-cut callback; a returned
//! cut is appended to the global cut pool and the node is solved again.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use crate::model::{LinearProgram, Row, Sense, SolveReport, Status, VarKind};
use crate::simplex::{solve_bounds, Basis, LpOptions};

/// Environment variable capping the number of branch-and-bound nodes.
pub const NODE_LIMIT_ENV: &str = "RUC_MILP_MAX_NODES";

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub gap_tol: f64,
    pub int_tol: f64,
    pub max_nodes: usize,
    pub lp: LpOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        let max_nodes = std::env::var(NODE_LIMIT_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(500_000);
        MilpOptions {
            gap_tol: 1e-6,
            int_tol: 1e-6,
            max_nodes,
            lp: LpOptions::default(),
        }
    }
}

impl MilpOptions {
    pub fn with_gap(mut self, gap_tol: f64) -> Self {
        self.gap_tol = gap_tol;
        self
    }
}

/// Lazy constraint callback: inspect an integer-feasible point and return a
/// violated cut, or `None` to accept it.
pub type LazyCallback<'a> = dyn FnMut(&[f64]) -> Option<Row> + 'a;

struct Node {
    bound: f64,
    id: usize,
    fixes: Vec<(usize, f64)>,
    basis: Option<Rc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Solves a MILP without lazy cuts.
pub fn solve_milp(lp: &LinearProgram, opts: &MilpOptions) -> SolveReport {
    solve_milp_with(lp, None, opts)
}

/// Solves a MILP, consulting `lazy` at every integer-feasible point.
pub fn solve_milp_with(lp: &LinearProgram, mut lazy: Option<&mut LazyCallback<'_>>, opts: &MilpOptions) -> SolveReport {
    let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut work = lp.clone();
    let binaries: Vec<usize> = lp.binaries().collect();
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap = BinaryHeap::new();
    let mut next_id = 0usize;
    let mut nodes = 0usize;
    let mut iterations = 0usize;
    let mut hit_limit = false;
    let mut unbounded = false;
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: next_id,
        fixes: Vec::new(),
        basis: None,
    });
    next_id += 1;

    let abs_gap = |inc: f64| opts.gap_tol * inc.abs().max(1.0);

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= inc - abs_gap(*inc) {
                heap.clear();
                break;
            }
        }
        if nodes >= opts.max_nodes {
            heap.push(node);
            hit_limit = true;
            break;
        }
        nodes += 1;
        let mut lower = work.lower.clone();
        let mut upper = work.upper.clone();
        for &(j, v) in &node.fixes {
            lower[j] = v;
            upper[j] = v;
        }
        let mut basis = node.basis.as_deref().cloned();
        loop {
            let (rep, b) = solve_bounds(&work, &lower, &upper, &opts.lp, basis.as_ref());
            iterations += rep.iterations;
            basis = b;
            match rep.status {
                Status::Optimal => {}
                Status::Infeasible => break,
                Status::Unbounded => {
                    unbounded = true;
                    break;
                }
                Status::IterationLimit => {
                    hit_limit = true;
                    break;
                }
            }
            let value = flip * rep.objective;
            if let Some((inc, _)) = &incumbent {
                if value >= inc - abs_gap(*inc) {
                    break;
                }
            }
            match most_fractional(&rep.primal, &binaries, opts.int_tol) {
                Some(j) => {
                    let shared = basis.take().map(Rc::new);
                    for side in [0.0, 1.0] {
                        let mut fixes = node.fixes.clone();
                        fixes.push((j, side));
                        heap.push(Node {
                            bound: value,
                            id: next_id,
                            fixes,
                            basis: shared.clone(),
                        });
                        next_id += 1;
                    }
                    break;
                }
                None => {
                    let point = polish(&work, &lower, &upper, &binaries, &rep.primal, opts, basis.as_ref())
                        .unwrap_or_else(|| rep.primal.clone());
                    if let Some(cb) = lazy.as_deref_mut() {
                        if let Some(cut) = cb(&point) {
                            work.push_row(cut);
                            continue;
                        }
                    }
                    let value = flip * lp.objective_value(&point);
                    if incumbent.as_ref().is_none_or(|(inc, _)| value < *inc) {
                        incumbent = Some((value, point));
                    }
                    break;
                }
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let mut report = match incumbent {
        Some((value, point)) => {
            let best_bound = if hit_limit { open_bound.min(value) } else { value };
            let gap = (value - best_bound).max(0.0) / value.abs().max(1.0);
            SolveReport {
                status: if hit_limit { Status::IterationLimit } else { Status::Optimal },
                objective: flip * value,
                primal: point,
                duals: Vec::new(),
                gap,
                best_bound: flip * best_bound,
                nodes,
                iterations,
            }
        }
        None if unbounded => SolveReport::empty(Status::Unbounded, lp.sense),
        None if hit_limit => SolveReport::empty(Status::IterationLimit, lp.sense),
        None => SolveReport::empty(Status::Infeasible, lp.sense),
    };
    report.nodes = nodes;
    report.iterations = iterations;
    report
}

fn most_fractional(x: &[f64], binaries: &[usize], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in binaries {
        let f = x[j] - x[j].floor();
        let score = f.min(1.0 - f);
        if score > tol && best.is_none_or(|(_, b)| score > b) {
            best = Some((j, score));
        }
    }
    best.map(|(j, _)| j)
}

/// Re-solves with every binary fixed at its rounded value so the continuous
/// part is exact for the integral pattern.
fn polish(
    lp: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
    binaries: &[usize],
    x: &[f64],
    opts: &MilpOptions,
    basis: Option<&Basis>,
) -> Option<Vec<f64>> {
    if binaries.is_empty() {
        return None;
    }
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    for &j in binaries {
        let v = x[j].round();
        lo[j] = v;
        hi[j] = v;
    }
    let (rep, _) = solve_bounds(lp, &lo, &hi, &opts.lp, basis);
    if rep.status != Status::Optimal {
        return None;
    }
    let mut p = rep.primal;
    for &j in binaries {
        debug_assert!(lp.kinds[j] == VarKind::Binary);
        p[j] = p[j].round();
    }
    Some(p)
}

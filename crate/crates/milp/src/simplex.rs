//! Bounded-variable revised simplex.
//!
//! Every row gets a logical variable `r_i = a_i·x` whose bounds encode the
//! row sense, so the working system is `A x − r = 0` with `l ≤ (x, r) ≤ u`.
//! The basis inverse is held dense (column-major) and updated by eta pivots.
//! It is rebuilt from the basis list every `refactor_every` pivots and once
//! more before a status is reported.
//!
//! Phase 1 minimises the sum of bound infeasibilities of the basic
//! variables; phase 2 the true objective. Pricing is Dantzig's rule with
//! lowest-index tie-breaking, switching to Bland's rule after a run of
//! degenerate pivots.

use crate::model::{LinearProgram, RowSense, Sense, SolveReport, Status};

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    /// 0 selects `max(10_000, 25·(rows + cols))`.
    pub max_iter: usize,
    pub refactor_every: usize,
    pub degenerate_before_bland: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iter: 0,
            refactor_every: 100,
            degenerate_before_bland: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarState {
    Basic,
    Lower,
    Upper,
    /// Free nonbasic variable parked at zero.
    Zero,
}

/// A simplex basis that can seed a later solve of a problem with the same
/// columns and a superset of the rows.
#[derive(Debug, Clone)]
pub struct Basis {
    n: usize,
    states: Vec<VarState>,
    basic: Vec<usize>,
}

/// Solves an LP, ignoring integrality marks.
pub fn solve_lp(lp: &LinearProgram) -> SolveReport {
    solve_lp_with(lp, &LpOptions::default(), None).0
}

/// Solves an LP starting from `warm` when given; returns the final basis.
pub fn solve_lp_with(
    lp: &LinearProgram,
    opts: &LpOptions,
    warm: Option<&Basis>,
) -> (SolveReport, Option<Basis>) {
    solve_bounds(lp, &lp.lower, &lp.upper, opts, warm)
}

/// Same as [`solve_lp_with`] but with variable bounds overridden.
pub(crate) fn solve_bounds(
    lp: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
    opts: &LpOptions,
    warm: Option<&Basis>,
) -> (SolveReport, Option<Basis>) {
    let n = lp.num_vars();
    for j in 0..n {
        if lower[j] > upper[j] + opts.feas_tol {
            return (SolveReport::empty(Status::Infeasible, lp.sense), None);
        }
    }
    // empty rows are the only presolve
    let mut kept = Vec::with_capacity(lp.rows.len());
    for (i, row) in lp.rows.iter().enumerate() {
        if row.coeffs.is_empty() {
            let bad = match row.sense {
                RowSense::Le => 0.0 > row.rhs + opts.feas_tol,
                RowSense::Ge => 0.0 < row.rhs - opts.feas_tol,
                RowSense::Eq => row.rhs.abs() > opts.feas_tol,
            };
            if bad {
                return (SolveReport::empty(Status::Infeasible, lp.sense), None);
            }
        } else {
            kept.push(i);
        }
    }
    let mut engine = Engine::new(lp, &kept, lower, upper, opts, warm);
    let status = engine.run();
    let basis = engine.basis();
    let mut report = SolveReport::empty(status, lp.sense);
    report.iterations = engine.iterations;
    match status {
        Status::Optimal => {
            let primal = engine.x[..n].to_vec();
            let objective = lp.objective_value(&primal);
            let pi = engine.row_duals();
            let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
            let mut duals = vec![0.0; lp.rows.len()];
            for (k, &i) in kept.iter().enumerate() {
                duals[i] = flip * pi[k];
            }
            report.primal = primal;
            report.objective = objective;
            report.best_bound = objective;
            report.duals = duals;
            report.gap = 0.0;
        }
        Status::IterationLimit => {
            report.primal = engine.x[..n].to_vec();
        }
        _ => {}
    }
    (report, Some(basis))
}

/// Lagrangian dual bound implied by `duals` (given in the LP's own sense):
/// a lower bound on the optimum of a minimisation, an upper bound for a
/// maximisation. Returns ∓∞ when the duals are infeasible.
pub fn dual_bound(lp: &LinearProgram, duals: &[f64]) -> f64 {
    const TOL: f64 = 1e-9;
    let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut reduced: Vec<f64> = lp.objective.iter().map(|c| flip * c).collect();
    let mut value = 0.0;
    for (row, &d) in lp.rows.iter().zip(duals) {
        let pi = flip * d;
        for &(j, a) in &row.coeffs {
            reduced[j] -= pi * a;
        }
        let ok = match row.sense {
            RowSense::Ge => pi >= -TOL,
            RowSense::Le => pi <= TOL,
            RowSense::Eq => true,
        };
        if !ok {
            return flip * f64::NEG_INFINITY;
        }
        value += pi * row.rhs;
    }
    for (j, &d) in reduced.iter().enumerate() {
        if d.abs() <= TOL * (1.0 + lp.objective[j].abs()) {
            continue;
        }
        let bound = if d > 0.0 { lp.lower[j] } else { lp.upper[j] };
        if !bound.is_finite() {
            return flip * f64::NEG_INFINITY;
        }
        value += d * bound;
    }
    flip * value
}

struct Engine<'a> {
    opts: &'a LpOptions,
    n: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    cost_scale: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basic: Vec<usize>,
    binv: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

enum Pick {
    Flip,
    Leave { pos: usize, to_upper: bool },
}

impl<'a> Engine<'a> {
    fn new(
        lp: &LinearProgram,
        kept: &[usize],
        lower: &[f64],
        upper: &[f64],
        opts: &'a LpOptions,
        warm: Option<&Basis>,
    ) -> Self {
        let n = lp.num_vars();
        let m = kept.len();
        let mut cols = vec![Vec::new(); n];
        for (k, &i) in kept.iter().enumerate() {
            for &(j, a) in &lp.rows[i].coeffs {
                cols[j].push((k, a));
            }
        }
        let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut cost: Vec<f64> = lp.objective.iter().map(|c| flip * c).collect();
        cost.resize(n + m, 0.0);
        let cost_scale = 1.0 + lp.objective.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        for &i in kept {
            let row = &lp.rows[i];
            let (l, h) = match row.sense {
                RowSense::Le => (f64::NEG_INFINITY, row.rhs),
                RowSense::Ge => (row.rhs, f64::INFINITY),
                RowSense::Eq => (row.rhs, row.rhs),
            };
            lo.push(l);
            hi.push(h);
        }
        let mut eng = Engine {
            opts,
            n,
            m,
            cols,
            cost,
            cost_scale,
            lo,
            hi,
            x: vec![0.0; n + m],
            state: vec![VarState::Lower; n + m],
            basic: (n..n + m).collect(),
            binv: Vec::new(),
            iterations: 0,
            since_refactor: 0,
        };
        match warm {
            Some(b) if b.n == n && b.basic.len() <= m && b.states.len() <= n + m => {
                eng.state[..b.states.len()].copy_from_slice(&b.states);
                for s in eng.state.iter_mut().skip(b.states.len()) {
                    *s = VarState::Basic;
                }
                eng.basic = b.basic.clone();
                eng.basic.extend(n + (b.states.len() - n)..n + m);
            }
            _ => {
                for j in n..n + m {
                    eng.state[j] = VarState::Basic;
                }
            }
        }
        for j in 0..n + m {
            if eng.state[j] != VarState::Basic {
                eng.park(j);
            }
        }
        eng.reinvert();
        eng.compute_basics();
        eng
    }

    fn basis(&self) -> Basis {
        Basis {
            n: self.n,
            states: self.state.clone(),
            basic: self.basic.clone(),
        }
    }

    /// Puts a nonbasic variable on the bound its state asks for, falling back
    /// to whichever bound exists.
    fn park(&mut self, j: usize) {
        let (l, h) = (self.lo[j], self.hi[j]);
        let want = self.state[j];
        let st = match want {
            VarState::Upper if h.is_finite() => VarState::Upper,
            VarState::Zero if !l.is_finite() && !h.is_finite() => VarState::Zero,
            _ if l.is_finite() => VarState::Lower,
            _ if h.is_finite() => VarState::Upper,
            _ => VarState::Zero,
        };
        self.state[j] = st;
        self.x[j] = match st {
            VarState::Lower => l,
            VarState::Upper => h,
            _ => 0.0,
        };
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                f(i, a);
            }
        } else {
            f(j - self.n, -1.0);
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        self.for_col(j, |k, a| {
            let col = &self.binv[k * m..(k + 1) * m];
            for (o, b) in out.iter_mut().zip(col) {
                *o += a * b;
            }
        });
        out
    }

    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        let nz: Vec<usize> = (0..m).filter(|&r| cb[r] != 0.0).collect();
        (0..m)
            .map(|c| {
                let col = &self.binv[c * m..(c + 1) * m];
                nz.iter().map(|&r| cb[r] * col[r]).sum()
            })
            .collect()
    }

    fn pivot(&mut self, p: usize, alpha: &[f64]) {
        let m = self.m;
        let ap = alpha[p];
        let nz: Vec<usize> = (0..m).filter(|&i| i != p && alpha[i] != 0.0).collect();
        for c in 0..m {
            let base = c * m;
            let v = self.binv[base + p];
            if v == 0.0 {
                continue;
            }
            let v = v / ap;
            self.binv[base + p] = v;
            for &i in &nz {
                self.binv[base + i] -= alpha[i] * v;
            }
        }
    }

    /// Rebuilds the basis inverse by pivoting the basic structurals into a
    /// slack basis. Columns that turn out dependent are dropped to a bound
    /// and replaced by logicals.
    fn reinvert(&mut self) {
        let (n, m) = (self.n, self.m);
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.binv[i * m + i] = -1.0;
        }
        let mut in_target = vec![false; m];
        for &j in &self.basic {
            if j >= n {
                in_target[j - n] = true;
            }
        }
        let mut holder: Vec<usize> = (n..n + m).collect();
        let structurals: Vec<usize> = self.basic.iter().copied().filter(|&j| j < n).collect();
        for s in structurals {
            let alpha = self.ftran(s);
            let mut best: Option<(usize, f64)> = None;
            for p in 0..m {
                let h = holder[p];
                if h < n || in_target[h - n] {
                    continue;
                }
                let a = alpha[p].abs();
                if a > 1e-9 && best.is_none_or(|(_, b)| a > b) {
                    best = Some((p, a));
                }
            }
            match best {
                Some((p, _)) => {
                    self.pivot(p, &alpha);
                    let old = holder[p];
                    holder[p] = s;
                    self.state[old] = VarState::Lower;
                    self.park(old);
                }
                None => {
                    self.state[s] = VarState::Lower;
                    self.park(s);
                }
            }
        }
        for &h in &holder {
            self.state[h] = VarState::Basic;
        }
        self.basic = holder;
        self.since_refactor = 0;
    }

    fn compute_basics(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.n + m {
            if self.state[j] == VarState::Basic || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            self.for_col(j, |i, a| rhs[i] -= a * xj);
        }
        let mut xb = vec![0.0; m];
        for (k, &r) in rhs.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            let col = &self.binv[k * m..(k + 1) * m];
            for (o, b) in xb.iter_mut().zip(col) {
                *o += r * b;
            }
        }
        for (p, &j) in self.basic.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    fn ftol(&self, b: f64) -> f64 {
        self.opts.feas_tol * (1.0 + b.abs())
    }

    fn infeasibility_costs(&self) -> Option<Vec<f64>> {
        let mut any = false;
        let cb = self
            .basic
            .iter()
            .map(|&j| {
                let v = self.x[j];
                if v < self.lo[j] - self.ftol(self.lo[j]) {
                    any = true;
                    -1.0
                } else if v > self.hi[j] + self.ftol(self.hi[j]) {
                    any = true;
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        any.then_some(cb)
    }

    fn row_duals(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.basic.iter().map(|&j| self.cost[j]).collect();
        self.btran(&cb)
    }

    fn max_iter(&self) -> usize {
        if self.opts.max_iter > 0 {
            self.opts.max_iter
        } else {
            (25 * (self.n + self.m)).max(10_000)
        }
    }

    fn run(&mut self) -> Status {
        let max_iter = self.max_iter();
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= max_iter {
                return Status::IterationLimit;
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.reinvert();
                self.compute_basics();
            }
            let phase1 = self.infeasibility_costs();
            let (cb, dtol) = match &phase1 {
                Some(cb) => (cb.clone(), self.opts.opt_tol),
                None => (
                    self.basic.iter().map(|&j| self.cost[j]).collect::<Vec<_>>(),
                    self.opts.opt_tol * self.cost_scale,
                ),
            };
            let pi = self.btran(&cb);
            let entering = self.price(&pi, phase1.is_some(), dtol, bland);
            let Some((q, dir)) = entering else {
                if self.since_refactor > 0 {
                    self.reinvert();
                    self.compute_basics();
                    continue;
                }
                return if phase1.is_some() { Status::Infeasible } else { Status::Optimal };
            };
            let alpha = self.ftran(q);
            let Some((t, pick)) = self.ratio_test(q, dir, &alpha, phase1.is_some(), bland) else {
                if phase1.is_some() {
                    if self.since_refactor > 0 {
                        self.reinvert();
                        self.compute_basics();
                        continue;
                    }
                    return Status::IterationLimit;
                }
                return Status::Unbounded;
            };
            self.iterations += 1;
            if t <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= self.opts.degenerate_before_bland {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            let step = dir * t;
            self.x[q] += step;
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let j = self.basic[p];
                    self.x[j] -= a * step;
                }
            }
            match pick {
                Pick::Flip => {
                    if dir > 0.0 {
                        self.state[q] = VarState::Upper;
                        self.x[q] = self.hi[q];
                    } else {
                        self.state[q] = VarState::Lower;
                        self.x[q] = self.lo[q];
                    }
                }
                Pick::Leave { pos, to_upper } => {
                    let out = self.basic[pos];
                    if to_upper {
                        self.state[out] = VarState::Upper;
                        self.x[out] = self.hi[out];
                    } else {
                        self.state[out] = VarState::Lower;
                        self.x[out] = self.lo[out];
                    }
                    self.state[q] = VarState::Basic;
                    self.basic[pos] = q;
                    self.pivot(pos, &alpha);
                    self.since_refactor += 1;
                }
            }
        }
    }

    fn price(&self, pi: &[f64], phase1: bool, dtol: f64, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n + self.m {
            let st = self.state[j];
            if st == VarState::Basic || self.lo[j] == self.hi[j] {
                continue;
            }
            let c = if phase1 { 0.0 } else { self.cost[j] };
            let d = if j < self.n {
                c - self.cols[j].iter().map(|&(i, a)| pi[i] * a).sum::<f64>()
            } else {
                c + pi[j - self.n]
            };
            let dir = match st {
                VarState::Lower if d < -dtol => 1.0,
                VarState::Upper if d > dtol => -1.0,
                VarState::Zero if d.abs() > dtol => -d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, b)| d.abs() > b) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], phase1: bool, bland: bool) -> Option<(f64, Pick)> {
        let mut best: Option<(f64, usize, bool, f64)> = None;
        for (p, &a) in alpha.iter().enumerate() {
            if a.abs() <= self.opts.pivot_tol {
                continue;
            }
            let j = self.basic[p];
            let rate = -dir * a;
            let (v, l, h) = (self.x[j], self.lo[j], self.hi[j]);
            let below = v < l - self.ftol(l);
            let above = v > h + self.ftol(h);
            let (limit, to_upper) = if rate > 0.0 {
                if phase1 && below {
                    ((l - v) / rate, false)
                } else if above || !h.is_finite() {
                    continue;
                } else {
                    ((h - v).max(0.0) / rate, true)
                }
            } else if phase1 && above {
                ((v - h) / -rate, true)
            } else if below || !l.is_finite() {
                continue;
            } else {
                ((v - l).max(0.0) / -rate, false)
            };
            let better = match best {
                None => true,
                Some((bl, bp, _, ba)) => {
                    if limit < bl - 1e-12 {
                        true
                    } else if limit <= bl + 1e-12 {
                        if bland {
                            j < self.basic[bp]
                        } else {
                            a.abs() > ba || (a.abs() == ba && j < self.basic[bp])
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                best = Some((limit, p, to_upper, a.abs()));
            }
        }
        let range = self.hi[q] - self.lo[q];
        if range.is_finite() && best.is_none_or(|(bl, ..)| range <= bl) {
            return Some((range, Pick::Flip));
        }
        best.map(|(t, pos, to_upper, _)| (t, Pick::Leave { pos, to_upper }))
    }
}

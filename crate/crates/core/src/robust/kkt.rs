//! The re-dispatch LP as a function of the net load, and its optimality
//! conditions written as a mixed-binary program over (u, y, duals).
//!
//! Complementary slackness uses one binary per inequality row and one or two
//! per column (lower bound, and upper bound when finite). Balance rows are
//! kept as equalities with free multipliers and need no binary.

use crate::error::{CoreError, Result};
use crate::system::{CompactRowKind, CompactTwoStage};
use ruc_milp::{big_m_for_row, BigMRecord, LinearProgram, Row, RowSense, Sense};

/// Rows closer than this to always-slack are kept.
const SLACK_MARGIN: f64 = 1e-9;
/// Columns whose upper bound is below this are fixed at zero.
const ZERO_COLUMN: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct InnerRow {
    pub name: String,
    /// Coefficients on inner columns.
    pub a: Vec<(usize, f64)>,
    /// Coefficients on the net load.
    pub d: Vec<(usize, f64)>,
    pub b0: f64,
    pub eq: bool,
}

/// `min cost·y  s.t.  a_i·y ≥ b0_i + d_i·u  (= for balance),  0 ≤ y ≤ upper`.
#[derive(Debug, Clone)]
pub(crate) struct InnerLp {
    pub cost: Vec<f64>,
    /// True column bound, possibly infinite.
    pub upper: Vec<f64>,
    /// Finite bound that every optimal solution respects; equals `upper`
    /// when that is finite.
    pub bound: Vec<f64>,
    /// Compact re-dispatch column behind each inner column; `None` for
    /// slack columns.
    pub origin: Vec<Option<usize>>,
    pub rows: Vec<InnerRow>,
}

fn interval(terms: impl Iterator<Item = (f64, f64, f64)>) -> (f64, f64) {
    // each term is (coefficient, lower, upper)
    terms.fold((0.0, 0.0), |(lo, hi), (a, l, u)| {
        let (p, q) = if a >= 0.0 { (a * l, a * u) } else { (a * u, a * l) };
        (lo + p, hi + q)
    })
}

impl InnerLp {
    /// The re-dispatch LP of schedule `xv` with reserve caps moved into
    /// column bounds, zero-capacity columns removed, and rows that are slack
    /// for every `u` in `[u_lo, u_hi]` dropped.
    pub fn from_compact(ct: &CompactTwoStage, xv: &[f64], u_lo: &[f64], u_hi: &[f64]) -> Result<Self> {
        let fixed = ct.rhs_fixed(xv);
        let mut cap = vec![f64::INFINITY; ct.num_y()];
        for (r, kind) in ct.kinds.iter().enumerate() {
            if matches!(kind, CompactRowKind::UpCap { .. } | CompactRowKind::DownCap { .. }) {
                let &[(j, coef)] = ct.a[r].as_slice() else {
                    return Err(CoreError::Dimension("reserve cap row must hold a single column".into()));
                };
                cap[j] = cap[j].min(fixed[r] / coef).max(0.0);
            }
        }
        let mut col_of = vec![None; ct.num_y()];
        let mut lp = InnerLp {
            cost: vec![],
            upper: vec![],
            bound: vec![],
            origin: vec![],
            rows: vec![],
        };
        for j in 0..ct.num_y() {
            if cap[j] > ZERO_COLUMN {
                col_of[j] = Some(lp.cost.len());
                lp.cost.push(ct.f[j]);
                lp.upper.push(cap[j]);
                lp.bound.push(cap[j]);
                lp.origin.push(Some(j));
            }
        }
        let mut r = 0;
        while r < ct.num_rows() {
            let kind = ct.kinds[r];
            let eq = matches!(kind, CompactRowKind::BalanceAbove { .. });
            let step = if eq {
                if !matches!(ct.kinds.get(r + 1), Some(CompactRowKind::BalanceBelow { .. })) {
                    return Err(CoreError::Dimension("balance rows must come in adjacent pairs".into()));
                }
                2
            } else {
                1
            };
            if !matches!(kind, CompactRowKind::UpCap { .. } | CompactRowKind::DownCap { .. }) {
                let a: Vec<(usize, f64)> = ct.a[r].iter().filter_map(|&(j, v)| col_of[j].map(|c| (c, v))).collect();
                let row = InnerRow {
                    name: format!("{kind:?}"),
                    a,
                    d: ct.d[r].clone(),
                    b0: fixed[r],
                    eq,
                };
                if eq || !lp.always_slack(&row, u_lo, u_hi) {
                    lp.rows.push(row);
                }
            }
            r += step;
        }
        Ok(lp)
    }

    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    /// Range of `a·y − d·u − b0` over the column bounds and the load box.
    fn slack_range(&self, row: &InnerRow, u_lo: &[f64], u_hi: &[f64]) -> (f64, f64) {
        let (lo, hi) = interval(
            row.a
                .iter()
                .map(|&(j, a)| (a, 0.0, self.bound[j]))
                .chain(row.d.iter().map(|&(k, d)| (-d, u_lo[k], u_hi[k]))),
        );
        (lo - row.b0, hi - row.b0)
    }

    fn always_slack(&self, row: &InnerRow, u_lo: &[f64], u_hi: &[f64]) -> bool {
        self.slack_range(row, u_lo, u_hi).0 >= SLACK_MARGIN
    }

    /// Phase-one version: zero column costs plus unit-cost slacks on every
    /// row that can be violated over the box. Also returns per-row
    /// multiplier bounds and whether each bound is exact (a row whose
    /// violation is priced at 1 has a multiplier of at most 1).
    pub fn feasibility(&self, u_lo: &[f64], u_hi: &[f64], dual_bound: f64) -> (InnerLp, Vec<f64>, Vec<bool>) {
        let mut out = InnerLp {
            cost: vec![0.0; self.num_cols()],
            upper: self.upper.clone(),
            bound: self.bound.clone(),
            origin: self.origin.clone(),
            rows: vec![],
        };
        let (mut lam, mut exact) = (vec![], vec![]);
        for row in &self.rows {
            let (lo, hi) = self.slack_range(row, u_lo, u_hi);
            let mut row = row.clone();
            // a slack at an optimum equals the row's shortfall, which the
            // interval bounds from above
            let short = lo < -SLACK_MARGIN;
            if short {
                let c = out.push_slack(-lo);
                row.a.push((c, 1.0));
            }
            let excess = row.eq && hi > SLACK_MARGIN;
            if excess {
                let c = out.push_slack(hi);
                row.a.push((c, -1.0));
            }
            let tight = if row.eq { short && excess } else { short };
            lam.push(if tight { 1.0 } else { dual_bound });
            exact.push(tight);
            out.rows.push(row);
        }
        (out, lam, exact)
    }

    fn push_slack(&mut self, bound: f64) -> usize {
        self.cost.push(1.0);
        self.upper.push(f64::INFINITY);
        self.bound.push(bound);
        self.origin.push(None);
        self.cost.len() - 1
    }

    /// Splits the LP into blocks that share no column. Each block keeps its
    /// rows in order; columns are renumbered within the block.
    pub fn components(&self) -> Vec<InnerLp> {
        let n = self.num_cols();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for row in &self.rows {
            if let Some(&(first, _)) = row.a.first() {
                for &(j, _) in &row.a[1..] {
                    let (a, b) = (find(&mut parent, first), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        // blocks keyed by root column; rows without columns stand alone
        let mut block_of_root: Vec<Option<usize>> = vec![None; n];
        let mut blocks: Vec<(Vec<usize>, Vec<usize>)> = vec![];
        for j in 0..n {
            let r = find(&mut parent, j);
            let b = *block_of_root[r].get_or_insert_with(|| {
                blocks.push((vec![], vec![]));
                blocks.len() - 1
            });
            blocks[b].0.push(j);
        }
        for (i, row) in self.rows.iter().enumerate() {
            match row.a.first() {
                Some(&(j, _)) => {
                    let b = block_of_root[find(&mut parent, j)].expect("column has a block");
                    blocks[b].1.push(i);
                }
                None => blocks.push((vec![], vec![i])),
            }
        }
        blocks
            .into_iter()
            .filter(|(_, rows)| !rows.is_empty())
            .map(|(cols, rows)| {
                let mut local = vec![usize::MAX; n];
                for (k, &j) in cols.iter().enumerate() {
                    local[j] = k;
                }
                InnerLp {
                    cost: cols.iter().map(|&j| self.cost[j]).collect(),
                    upper: cols.iter().map(|&j| self.upper[j]).collect(),
                    bound: cols.iter().map(|&j| self.bound[j]).collect(),
                    origin: cols.iter().map(|&j| self.origin[j]).collect(),
                    rows: rows
                        .iter()
                        .map(|&i| {
                            let mut r = self.rows[i].clone();
                            r.a = r.a.iter().map(|&(j, v)| (local[j], v)).collect();
                            r
                        })
                        .collect(),
                }
            })
            .collect()
    }

    pub fn has_slacks(&self) -> bool {
        self.origin.iter().any(Option::is_none)
    }
}

/// Constraints on the load beyond its box, possibly through auxiliary
/// nonnegative variables. Column indices count the load first, then the
/// auxiliaries.
#[derive(Debug, Clone)]
pub(crate) struct LoadRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub aux_upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LoadRegion {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        LoadRegion {
            lower,
            upper,
            aux_upper: vec![],
            rows: vec![],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

/// Column layout of a KKT program.
#[derive(Debug, Clone)]
pub(crate) struct KktProgram {
    pub lp: LinearProgram,
    pub u_dim: usize,
    /// Multiplier columns whose bound is a modelling choice rather than a
    /// consequence of the data; audited after the solve.
    pub dual_records: Vec<BigMRecord>,
}

/// `max cost·y` over the load region and over `y` optimal for the inner LP
/// at that load. `lam_ub[i]` bounds the multiplier of row `i` (in absolute
/// value for equalities); `exact[i]` marks bounds that need no audit.
pub(crate) fn kkt_program(inner: &InnerLp, region: &LoadRegion, lam_ub: &[f64], exact: &[bool], name: &str) -> Result<KktProgram> {
    let n_u = region.dim();
    let mut lp = LinearProgram::new(Sense::Maximize).with_name(name);
    for k in 0..n_u {
        lp.add_var(format!("u{k}"), region.lower[k], region.upper[k], 0.0);
    }
    for (k, &ub) in region.aux_upper.iter().enumerate() {
        lp.add_var(format!("aux{k}"), 0.0, ub, 0.0);
    }
    for row in &region.rows {
        lp.push_row(row.clone());
    }
    let y_cols: Vec<usize> = (0..inner.num_cols())
        .map(|j| lp.add_var(format!("y{j}"), 0.0, inner.bound[j], inner.cost[j]))
        .collect();
    let lam: Vec<usize> = inner
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let lo = if r.eq { -lam_ub[i] } else { 0.0 };
            lp.add_var(format!("lam[{}]", r.name), lo, lam_ub[i], 0.0)
        })
        .collect();
    let mut dual_records = vec![];
    for (i, row) in inner.rows.iter().enumerate() {
        let mut coeffs: Vec<(usize, f64)> = row.a.iter().map(|&(j, a)| (y_cols[j], a)).collect();
        coeffs.extend(row.d.iter().map(|&(k, d)| (k, -d)));
        let primal = Row::new(format!("primal[{}]", row.name), coeffs, if row.eq { RowSense::Eq } else { RowSense::Ge }, row.b0);
        if !row.eq {
            let mp = big_m_for_row(&lp.lower, &lp.upper, &primal)?;
            check_m(&primal.name, mp)?;
            let z = lp.add_binary(format!("z[{}]", row.name), 0.0);
            let mut slack = primal.coeffs.clone();
            slack.push((z, mp));
            lp.add_row(format!("slack_off[{}]", row.name), slack, RowSense::Le, row.b0 + mp);
            lp.add_row(format!("dual_off[{}]", row.name), vec![(lam[i], 1.0), (z, -lam_ub[i])], RowSense::Le, 0.0);
        }
        if !exact[i] {
            dual_records.push(BigMRecord {
                expr: Row::new(format!("lam[{}]", row.name), vec![(lam[i], 1.0)], RowSense::Ge, 0.0),
                m: lam_ub[i],
            });
        }
        lp.push_row(primal);
    }
    // columns of A, for the reduced costs
    let mut col_rows: Vec<Vec<(usize, f64)>> = vec![vec![]; inner.num_cols()];
    for (i, row) in inner.rows.iter().enumerate() {
        for &(j, a) in &row.a {
            col_rows[j].push((i, a));
        }
    }
    for j in 0..inner.num_cols() {
        let cost = inner.cost[j];
        let pull: f64 = col_rows[j].iter().map(|&(i, a)| a.abs() * lam_ub[i]).sum();
        // reduced cost  cost − Σ a_ij λ_i + μ_j ≥ 0, zero unless y_j = 0
        let mut reduced: Vec<(usize, f64)> = col_rows[j].iter().map(|&(i, a)| (lam[i], -a)).collect();
        let mut m_reduced = cost.abs() + pull;
        if inner.upper[j].is_finite() {
            let m_mu = pull + cost.abs();
            let mu = lp.add_var(format!("mu[y{j}]"), 0.0, m_mu, 0.0);
            reduced.push((mu, 1.0));
            m_reduced += m_mu;
            let v = lp.add_binary(format!("at_upper[y{j}]"), 0.0);
            lp.add_row(format!("mu_off[y{j}]"), vec![(mu, 1.0), (v, -m_mu)], RowSense::Le, 0.0);
            lp.add_row(format!("upper_on[y{j}]"), vec![(y_cols[j], -1.0), (v, inner.upper[j])], RowSense::Le, 0.0);
            let w = lp.add_binary(format!("at_lower[y{j}]"), 0.0);
            lp.add_row(format!("one_side[y{j}]"), vec![(v, 1.0), (w, 1.0)], RowSense::Le, 1.0);
            add_lower_pair(&mut lp, j, &reduced, cost, m_reduced, y_cols[j], inner.bound[j], w)?;
        } else {
            let w = lp.add_binary(format!("at_lower[y{j}]"), 0.0);
            add_lower_pair(&mut lp, j, &reduced, cost, m_reduced, y_cols[j], inner.bound[j], w)?;
        }
    }
    Ok(KktProgram {
        lp,
        u_dim: n_u,
        dual_records,
    })
}

#[allow(clippy::too_many_arguments)]
fn add_lower_pair(lp: &mut LinearProgram, j: usize, reduced: &[(usize, f64)], cost: f64, m: f64, y: usize, bound: f64, w: usize) -> Result<()> {
    check_m(&format!("reduced cost of y{j}"), m)?;
    lp.add_row(format!("dual_feas[y{j}]"), reduced.to_vec(), RowSense::Ge, -cost);
    let mut off = reduced.to_vec();
    off.push((w, -m));
    lp.add_row(format!("reduced_off[y{j}]"), off, RowSense::Le, -cost);
    lp.add_row(format!("lower_on[y{j}]"), vec![(y, 1.0), (w, bound)], RowSense::Le, bound);
    Ok(())
}

/// Largest big-M constant accepted before the model is declared too loose to
/// trust.
pub(crate) const MAX_BIG_M: f64 = 1e9;

fn check_m(what: &str, m: f64) -> Result<()> {
    if m.is_finite() && m <= MAX_BIG_M {
        Ok(())
    } else {
        Err(CoreError::BigMBlowUp {
            what: what.to_string(),
            value: m,
        })
    }
}

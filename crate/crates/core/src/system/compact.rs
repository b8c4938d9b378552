use super::predispatch::ScheduleIndex;
use super::redispatch::RedispatchIndex;
use super::schedule::{CommitmentSchedule, RedispatchPlan};
use super::PowerSystem;
use ruc_milp::{LinearProgram, RowSense, Sense};

/// Which network condition a compact row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompactRowKind {
    /// Supply at least the load (the `≥` half of the balance equality).
    BalanceAbove { t: usize },
    /// Supply at most the load (the `≤` half, negated).
    BalanceBelow { t: usize },
    FlowUpper { line: usize, t: usize },
    FlowLower { line: usize, t: usize },
    UpCap { g: usize, t: usize },
    DownCap { g: usize, t: usize },
}

/// Re-dispatch constraints in the form `A y ≥ B x + D u + E` with costs
/// `C·x` and `F·y`. Rows are sparse `(column, coefficient)` lists; balance
/// halves are stored as adjacent rows.
#[derive(Debug, Clone)]
pub struct CompactTwoStage {
    pub x_index: ScheduleIndex,
    pub y_index: RedispatchIndex,
    pub u_dim: usize,
    pub a: Vec<Vec<(usize, f64)>>,
    pub b: Vec<Vec<(usize, f64)>>,
    pub d: Vec<Vec<(usize, f64)>>,
    pub e: Vec<f64>,
    pub c: Vec<f64>,
    pub f: Vec<f64>,
    pub kinds: Vec<CompactRowKind>,
}

fn dot(row: &[(usize, f64)], v: &[f64]) -> f64 {
    row.iter().map(|&(j, a)| a * v[j]).sum()
}

impl CompactTwoStage {
    pub fn build(sys: &PowerSystem) -> Self {
        let (ng, nt, ni) = (sys.num_gens(), sys.horizon, sys.num_buses());
        let xi = ScheduleIndex {
            gens: ng,
            periods: nt,
            offset: 0,
        };
        let yi = RedispatchIndex {
            gens: ng,
            periods: nt,
            offset: 0,
        };
        let mut out = CompactTwoStage {
            x_index: xi,
            y_index: yi,
            u_dim: sys.load_dim(),
            a: vec![],
            b: vec![],
            d: vec![],
            e: vec![],
            c: vec![0.0; xi.len()],
            f: vec![0.0; yi.len()],
            kinds: vec![],
        };
        for (g, gen) in sys.generators.iter().enumerate() {
            for t in 0..nt {
                out.c[xi.start(g, t)] = gen.o_plus;
                out.c[xi.stop(g, t)] = gen.o_minus;
                out.c[xi.p(g, t)] = gen.rho;
                out.c[xi.r_up(g, t)] = gen.gamma_plus;
                out.c[xi.r_down(g, t)] = gen.gamma_minus;
                out.f[yi.up(g, t)] = gen.rho_plus;
                out.f[yi.down(g, t)] = gen.rho_minus;
            }
        }
        // `sign` = +1 builds "adjusted injection ≥ ...", -1 the mirrored row
        let push_pair = |out: &mut CompactTwoStage, gen_w: &dyn Fn(usize) -> f64, bus_w: &dyn Fn(usize) -> f64, t: usize, e: f64, kinds: [CompactRowKind; 2]| {
            for (sign, kind) in [1.0, -1.0].into_iter().zip(kinds) {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for g in 0..ng {
                    let w = gen_w(g);
                    if w != 0.0 {
                        a.push((yi.up(g, t), sign * w));
                        a.push((yi.down(g, t), -sign * w));
                        b.push((xi.p(g, t), -sign * w));
                    }
                }
                let d = (0..ni)
                    .filter(|&i| bus_w(i) != 0.0)
                    .map(|i| (sys.load_index(i, t), sign * bus_w(i)))
                    .collect();
                out.a.push(a);
                out.b.push(b);
                out.d.push(d);
                out.e.push(e);
                out.kinds.push(kind);
            }
        };
        for t in 0..nt {
            push_pair(
                &mut out,
                &|_| 1.0,
                &|_| 1.0,
                t,
                0.0,
                [CompactRowKind::BalanceAbove { t }, CompactRowKind::BalanceBelow { t }],
            );
        }
        for (l, line) in sys.lines.iter().enumerate() {
            for t in 0..nt {
                // flow ≥ −S first, then flow ≤ S
                push_pair(
                    &mut out,
                    &|g| sys.ptdf.gen[l][g],
                    &|i| sys.ptdf.bus[l][i],
                    t,
                    -line.capacity,
                    [CompactRowKind::FlowLower { line: l, t }, CompactRowKind::FlowUpper { line: l, t }],
                );
            }
        }
        for g in 0..ng {
            for t in 0..nt {
                out.a.push(vec![(yi.up(g, t), -1.0)]);
                out.b.push(vec![(xi.r_up(g, t), -1.0)]);
                out.d.push(vec![]);
                out.e.push(0.0);
                out.kinds.push(CompactRowKind::UpCap { g, t });
                out.a.push(vec![(yi.down(g, t), -1.0)]);
                out.b.push(vec![(xi.r_down(g, t), -1.0)]);
                out.d.push(vec![]);
                out.e.push(0.0);
                out.kinds.push(CompactRowKind::DownCap { g, t });
            }
        }
        out
    }

    pub fn num_rows(&self) -> usize {
        self.a.len()
    }

    pub fn num_y(&self) -> usize {
        self.y_index.len()
    }

    pub fn num_x(&self) -> usize {
        self.x_index.len()
    }

    pub fn x_vector(&self, x: &CommitmentSchedule) -> Vec<f64> {
        let mut v = vec![0.0; self.num_x()];
        self.x_index.write(x, &mut v);
        v
    }

    pub fn y_vector(&self, y: &RedispatchPlan) -> Vec<f64> {
        let mut v = vec![0.0; self.num_y()];
        self.y_index.write(y, &mut v);
        v
    }

    /// Row-wise `B x + E` (the part of the right-hand side fixed by `x`).
    pub fn rhs_fixed(&self, xv: &[f64]) -> Vec<f64> {
        (0..self.num_rows()).map(|r| dot(&self.b[r], xv) + self.e[r]).collect()
    }

    pub fn rhs(&self, xv: &[f64], u: &[f64]) -> Vec<f64> {
        let mut r = self.rhs_fixed(xv);
        for (k, v) in r.iter_mut().enumerate() {
            *v += dot(&self.d[k], u);
        }
        r
    }

    /// `A y − B x − D u − E`; nonnegative exactly when `y` is admissible.
    pub fn residuals(&self, xv: &[f64], u: &[f64], yv: &[f64]) -> Vec<f64> {
        let rhs = self.rhs(xv, u);
        (0..self.num_rows()).map(|r| dot(&self.a[r], yv) - rhs[r]).collect()
    }

    pub fn pre_cost(&self, xv: &[f64]) -> f64 {
        self.c.iter().zip(xv).map(|(c, x)| c * x).sum()
    }

    pub fn re_cost(&self, yv: &[f64]) -> f64 {
        self.f.iter().zip(yv).map(|(f, y)| f * y).sum()
    }

    /// `min F·y  s.t.  A y ≥ B x + D u + E, y ≥ 0`.
    pub fn recourse_lp(&self, xv: &[f64], u: &[f64]) -> LinearProgram {
        let mut lp = LinearProgram::new(Sense::Minimize).with_name("compact_recourse");
        for j in 0..self.num_y() {
            lp.add_var(format!("y{j}"), 0.0, f64::INFINITY, self.f[j]);
        }
        for (r, rhs) in self.rhs(xv, u).into_iter().enumerate() {
            lp.add_row(format!("row{r}"), self.a[r].clone(), RowSense::Ge, rhs);
        }
        lp
    }
}

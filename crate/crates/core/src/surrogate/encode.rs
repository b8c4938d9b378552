//! The surrogate as mixed-integer linear constraints: the combined
//! prediction, its principal components, the input scaling, one binary per
//! ReLU unit whose sign is not fixed by interval bounds, and the output.

use super::forecast::{ForecastBundle, WeightVector};
use super::SurrogateModel;
use crate::error::{solver_error, CoreError, Result};
use ruc_milp::{big_m_for_row, solve_milp, LinearProgram, MilpOptions, Row, RowSense, Sense, Status};

/// Big-M constants above this are rejected as too loose to trust.
pub const MAX_RELU_BIG_M: f64 = 1e6;

/// Column positions in an encoded surrogate.
#[derive(Debug, Clone)]
pub struct SurrogateVars {
    pub weights: Vec<usize>,
    pub prediction: Vec<usize>,
    /// Scaled network inputs.
    pub inputs: Vec<usize>,
    pub pre: Vec<Vec<usize>>,
    pub post: Vec<Vec<usize>>,
    /// Binary per unit, `None` when the unit's sign is fixed.
    pub active: Vec<Vec<Option<usize>>>,
    pub output: usize,
    /// Interval of every pre-activation over the weight simplex.
    pub pre_bounds: Vec<Vec<(f64, f64)>>,
    pub big_m: Vec<Vec<f64>>,
}

fn interval_affine(weights: &[f64], bias: f64, lo: &[f64], hi: &[f64]) -> (f64, f64) {
    weights.iter().zip(lo.iter().zip(hi)).fold((bias, bias), |(a, b), (w, (l, h))| {
        if *w >= 0.0 {
            (a + w * l, b + w * h)
        } else {
            (a + w * h, b + w * l)
        }
    })
}

/// Encodes `I = surrogate(w)` for the predictions in `bundle`, minimizing
/// `I` over the weight simplex.
pub fn encode_surrogate_milp(model: &SurrogateModel, bundle: &ForecastBundle) -> Result<(LinearProgram, SurrogateVars)> {
    model.check_bundle(bundle)?;
    let (nm, dim, np) = (bundle.num_methods(), bundle.dim(), model.pca.num_components());
    let mlp = &model.mlp;
    let mut lp = LinearProgram::new(Sense::Minimize).with_name("surrogate_weights");
    let weights: Vec<usize> = (0..nm).map(|m| lp.add_var(format!("w[{m}]"), 0.0, 1.0, 0.0)).collect();
    lp.add_row("simplex", weights.iter().map(|&c| (c, 1.0)).collect(), RowSense::Eq, 1.0);
    let prediction: Vec<usize> = (0..dim)
        .map(|k| {
            let lo = bundle.methods.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            let hi = bundle.methods.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            let col = lp.add_var(format!("u_hat[{k}]"), lo, hi, 0.0);
            let mut coeffs = vec![(col, 1.0)];
            coeffs.extend(weights.iter().enumerate().map(|(m, &w)| (w, -bundle.methods[m][k])));
            lp.add_row(format!("combine[{k}]"), coeffs, RowSense::Eq, 0.0);
            col
        })
        .collect();
    // exact input ranges: each feature is linear in w, so its extremes sit at
    // simplex vertices
    let vertex_features: Vec<Vec<f64>> = (0..nm).map(|m| model.scaled_features(bundle, &WeightVector::vertex(nm, m))).collect::<Result<_>>()?;
    let mut lo: Vec<f64> = (0..mlp.num_inputs()).map(|k| vertex_features.iter().map(|f| f[k]).fold(f64::INFINITY, f64::min)).collect();
    let mut hi: Vec<f64> = (0..mlp.num_inputs()).map(|k| vertex_features.iter().map(|f| f[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let mut inputs = vec![];
    for j in 0..np {
        let (a, b) = (mlp.input_scale[j], mlp.input_shift[j]);
        let comp = &model.pca.components[j];
        let col = lp.add_var(format!("v0[{j}]"), lo[j], hi[j], 0.0);
        let mut coeffs = vec![(col, 1.0)];
        coeffs.extend(prediction.iter().zip(comp).filter(|(_, p)| **p != 0.0).map(|(&c, p)| (c, -a * p)));
        let shift = b - a * comp.iter().zip(&model.pca.mean).map(|(p, m)| p * m).sum::<f64>();
        lp.add_row(format!("pca[{j}]"), coeffs, RowSense::Eq, shift);
        inputs.push(col);
    }
    for m in 0..nm - 1 {
        let k = np + m;
        let (a, b) = (mlp.input_scale[k], mlp.input_shift[k]);
        let col = lp.add_var(format!("v0[{k}]"), lo[k], hi[k], 0.0);
        lp.add_row(format!("weight_in[{m}]"), vec![(col, 1.0), (weights[m], -a)], RowSense::Eq, b);
        inputs.push(col);
    }
    let mut below = inputs.clone();
    let (mut pre, mut post, mut active, mut pre_bounds, mut big_m) = (vec![], vec![], vec![], vec![], vec![]);
    for (li, layer) in mlp.hidden.iter().enumerate() {
        let (mut s_cols, mut v_cols, mut z_cols, mut bounds, mut ms) = (vec![], vec![], vec![], vec![], vec![]);
        let (mut next_lo, mut next_hi) = (vec![], vec![]);
        for (j, (w, &b)) in layer.weights.iter().zip(&layer.bias).enumerate() {
            let (slo, shi) = interval_affine(w, b, &lo, &hi);
            let s = lp.add_var(format!("s[{li},{j}]"), slo, shi, 0.0);
            let expr: Vec<(usize, f64)> = below.iter().zip(w).map(|(&c, &a)| (c, a)).collect();
            let mut def = vec![(s, 1.0)];
            def.extend(expr.iter().map(|&(c, a)| (c, -a)));
            lp.add_row(format!("affine[{li},{j}]"), def, RowSense::Eq, b);
            let v = lp.add_var(format!("v[{li},{j}]"), 0.0, shi.max(0.0), 0.0);
            let mut z = None;
            let mut m_used = 0.0;
            if shi <= 0.0 {
                // never active: v is fixed at zero by its bounds
            } else if slo >= 0.0 {
                lp.add_row(format!("relu_pass[{li},{j}]"), vec![(v, 1.0), (s, -1.0)], RowSense::Eq, 0.0);
            } else {
                let m = big_m_for_row(&lp.lower, &lp.upper, &Row::new("pre", expr, RowSense::Eq, -b))?;
                if m > MAX_RELU_BIG_M {
                    return Err(CoreError::BigMBlowUp {
                        what: format!("ReLU unit ({li}, {j})"),
                        value: m,
                    });
                }
                let zc = lp.add_binary(format!("z[{li},{j}]"), 0.0);
                lp.add_row(format!("relu_off[{li},{j}]"), vec![(v, 1.0), (zc, -m)], RowSense::Le, 0.0);
                lp.add_row(format!("relu_floor[{li},{j}]"), vec![(v, 1.0), (s, -1.0)], RowSense::Ge, 0.0);
                lp.add_row(format!("relu_on[{li},{j}]"), vec![(v, 1.0), (s, -1.0), (zc, m)], RowSense::Le, m);
                z = Some(zc);
                m_used = m;
            }
            next_lo.push(slo.max(0.0));
            next_hi.push(shi.max(0.0));
            s_cols.push(s);
            v_cols.push(v);
            z_cols.push(z);
            bounds.push((slo, shi));
            ms.push(m_used);
        }
        below = v_cols.clone();
        lo = next_lo;
        hi = next_hi;
        pre.push(s_cols);
        post.push(v_cols);
        active.push(z_cols);
        pre_bounds.push(bounds);
        big_m.push(ms);
    }
    let output = lp.add_var("I", f64::NEG_INFINITY, f64::INFINITY, 1.0);
    let mut head = vec![(output, 1.0)];
    head.extend(below.iter().zip(&mlp.head.weights[0]).map(|(&c, &a)| (c, -a)));
    lp.add_row("output", head, RowSense::Eq, mlp.head.bias[0]);
    Ok((
        lp,
        SurrogateVars {
            weights,
            prediction,
            inputs,
            pre,
            post,
            active,
            output,
            pre_bounds,
            big_m,
        },
    ))
}

fn milp_options() -> MilpOptions {
    MilpOptions::default().with_gap(1e-10)
}

/// Minimizes the surrogate over the weight simplex; returns the minimizer
/// and the minimal predicted cost.
pub fn optimize_weights(model: &SurrogateModel, bundle: &ForecastBundle) -> Result<(WeightVector, f64)> {
    let (lp, vars) = encode_surrogate_milp(model, bundle)?;
    let rep = solve_milp(&lp, &milp_options());
    if rep.status != Status::Optimal {
        return Err(solver_error("surrogate weight optimization", rep.status));
    }
    let raw: Vec<f64> = vars.weights.iter().map(|&c| rep.primal[c].max(0.0)).collect();
    let sum: f64 = raw.iter().sum();
    let w = WeightVector::new(raw.iter().map(|x| x / sum).collect())?;
    Ok((w, rep.primal[vars.output]))
}

/// Value of `I` in the encoding with the weights pinned to `w`.
pub fn surrogate_milp_value(model: &SurrogateModel, bundle: &ForecastBundle, w: &WeightVector) -> Result<f64> {
    let (mut lp, vars) = encode_surrogate_milp(model, bundle)?;
    for (&c, &v) in vars.weights.iter().zip(&w.0) {
        lp.lower[c] = v;
        lp.upper[c] = v;
    }
    let rep = solve_milp(&lp, &milp_options());
    if rep.status != Status::Optimal {
        return Err(solver_error("surrogate evaluation with fixed weights", rep.status));
    }
    Ok(rep.primal[vars.output])
}

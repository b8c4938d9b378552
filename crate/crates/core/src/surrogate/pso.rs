use super::forecast::{project_simplex, WeightVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsoOptions {
    pub particles: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Objective evaluations allowed, initial positions included.
    pub max_evals: usize,
    pub seed: u64,
}

impl Default for PsoOptions {
    fn default() -> Self {
        PsoOptions {
            particles: 10,
            inertia: 0.5,
            cognitive: 1.0,
            social: 1.5,
            max_evals: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PsoResult {
    pub weight: WeightVector,
    pub value: f64,
    pub evals: usize,
}

fn random_simplex_point(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    // normalized exponentials are uniform on the simplex
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Particle swarm over the weight simplex; positions are projected back
/// onto the simplex after every velocity step.
pub fn optimize_weights_pso(mut eval: impl FnMut(&WeightVector) -> f64, methods: usize, opts: &PsoOptions) -> PsoResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = opts.particles.max(1);
    let mut pos: Vec<Vec<f64>> = (0..n).map(|_| random_simplex_point(methods, &mut rng)).collect();
    let mut vel: Vec<Vec<f64>> = vec![vec![0.0; methods]; n];
    let mut evals = 0;
    let mut score = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = eval(&WeightVector(x.to_vec()));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best_pos = pos.clone();
    let mut best_val: Vec<f64> = vec![f64::INFINITY; n];
    let (mut g_pos, mut g_val) = (pos[0].clone(), f64::INFINITY);
    for i in 0..n {
        if evals >= opts.max_evals {
            break;
        }
        best_val[i] = score(&pos[i], &mut evals);
        if best_val[i] < g_val {
            g_val = best_val[i];
            g_pos = pos[i].clone();
        }
    }
    'outer: loop {
        for i in 0..n {
            if evals >= opts.max_evals {
                break 'outer;
            }
            for k in 0..methods {
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                vel[i][k] = opts.inertia * vel[i][k] + opts.cognitive * r1 * (best_pos[i][k] - pos[i][k]) + opts.social * r2 * (g_pos[k] - pos[i][k]);
            }
            let moved: Vec<f64> = pos[i].iter().zip(&vel[i]).map(|(x, v)| x + v).collect();
            pos[i] = project_simplex(&moved);
            let v = score(&pos[i], &mut evals);
            if v < best_val[i] {
                best_val[i] = v;
                best_pos[i] = pos[i].clone();
            }
            if v < g_val {
                g_val = v;
                g_pos = pos[i].clone();
            }
        }
    }
    PsoResult {
        weight: WeightVector(g_pos),
        value: g_val,
        evals,
    }
}

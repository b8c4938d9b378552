#![allow(dead_code)]

use ruc_core::system::{ptdf_from_reactances, CommitmentSchedule, Generator, Line, PowerSystem, Ptdf};

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

/// Three buses in a triangle with equal reactances; generators at buses 1
/// and 2, slack at bus 1.
pub fn triangle(horizon: usize, capacity: f64) -> PowerSystem {
    let buses = vec![1, 2, 3];
    let lines = vec![
        Line { from: 1, to: 2, capacity },
        Line { from: 2, to: 3, capacity },
        Line { from: 1, to: 3, capacity },
    ];
    let gens = vec![generator(1, 20.0, 150.0, 20.0), generator(2, 0.0, 80.0, 35.0)];
    let gen_bus: Vec<usize> = gens.iter().map(|g| g.bus).collect();
    let ptdf = ptdf_from_reactances(&buses, &lines, &[0.1; 3], &gen_bus, 0).unwrap();
    PowerSystem { horizon, buses, generators: gens, lines, ptdf }
}

/// Every unit on, output split in the given shares of `total[t]`, and flat
/// reserves.
pub fn flat_schedule(sys: &PowerSystem, total: &[f64], shares: &[f64], r_up: f64, r_down: f64) -> CommitmentSchedule {
    let (ng, nt) = (sys.num_gens(), sys.horizon);
    let mut x = CommitmentSchedule::zeros(ng, nt);
    for g in 0..ng {
        for t in 0..nt {
            x.theta[g][t] = 1.0;
            x.p[g][t] = shares[g] * total[t];
            x.r_up[g][t] = r_up;
            x.r_down[g][t] = r_down;
        }
        x.start[g][0] = 1.0;
    }
    x
}

pub fn scaled_box(center: &[f64], lo: f64, hi: f64) -> ruc_core::uncertainty::BoxSet {
    ruc_core::uncertainty::BoxSet::new(center.iter().map(|c| c * lo).collect(), center.iter().map(|c| c * hi).collect()).unwrap()
}

/// The triangle network with tight ramps, so ramp rows bind.
pub fn ramp_limited(horizon: usize) -> PowerSystem {
    let mut sys = triangle(horizon, 100.0);
    for g in &mut sys.generators {
        g.k_plus = 25.0;
        g.k_minus = 25.0;
        g.k_up = g.p_min.max(30.0);
        g.k_down = g.p_min.max(30.0);
    }
    sys
}

/// Draws `n` pairs of a pre-dispatch schedule and an admissible re-dispatch.
/// Each schedule solves the pre-dispatch MILP for a random load with random
/// signed objective coefficients. Each re-dispatch solves the re-dispatch LP at a random
/// realization with random adjustment costs. Draws whose realization admits
/// no re-dispatch are skipped.
pub fn sample_admissible_pairs(sys: &PowerSystem, n: usize, seed: u64) -> Vec<(CommitmentSchedule, Vec<f64>, ruc_core::system::RedispatchPlan)> {
    use rand::{Rng, SeedableRng};
    use ruc_core::system::{build_predispatch_constraints, recourse_lp};
    use ruc_milp::{solve_lp, solve_milp, MilpOptions, Status};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let nb = sys.num_buses();
    let mut out = vec![];
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        assert!(attempts < 50 * n, "too few admissible draws");
        let forecast: Vec<f64> = (0..nb * sys.horizon).map(|_| rng.random_range(15.0..70.0)).collect();
        let mut model = build_predispatch_constraints(sys, &forecast).unwrap();
        // any objective gives a point of the feasible set; signed random
        // costs spread the draws over it, reserves included
        for c in model.lp.objective.iter_mut() {
            *c = rng.random_range(-1.0..1.0);
        }
        let rep = solve_milp(&model.lp, &MilpOptions::default());
        if rep.status != Status::Optimal {
            continue;
        }
        let x = model.index.read(&rep.primal);
        for _ in 0..4 {
            let u: Vec<f64> = forecast.iter().map(|f| f + rng.random_range(-15.0..15.0)).collect();
            let (mut lp, idx) = recourse_lp(sys, &x, &u);
            for c in lp.objective.iter_mut() {
                *c = rng.random_range(0.1..10.0);
            }
            let y = solve_lp(&lp);
            if y.status == Status::Optimal {
                out.push((x.clone(), u, idx.read(&y.primal)));
                if out.len() == n {
                    break;
                }
            }
        }
    }
    out
}

mod common;

use common::{generator, ramp_limited, sample_admissible_pairs, single_bus, triangle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ruc_core::system::*;
use ruc_milp::{solve_lp, solve_milp, MilpOptions, Status};

fn random_schedule(sys: &PowerSystem, rng: &mut impl Rng) -> CommitmentSchedule {
    let (ng, nt) = (sys.num_gens(), sys.horizon);
    let mut x = CommitmentSchedule::zeros(ng, nt);
    for (g, gen) in sys.generators.iter().enumerate() {
        for t in 0..nt {
            x.theta[g][t] = f64::from(rng.random_bool(0.7) as u8);
            x.p[g][t] = x.theta[g][t] * rng.random_range(gen.p_min..=gen.p_max);
            x.r_up[g][t] = x.theta[g][t] * rng.random_range(0.0..=gen.r_plus_max);
            x.r_down[g][t] = x.theta[g][t] * rng.random_range(0.0..=gen.r_minus_max);
        }
    }
    x.derive_transitions(&vec![0; ng]);
    x
}

fn random_plan(sys: &PowerSystem, rng: &mut impl Rng) -> RedispatchPlan {
    let mut y = RedispatchPlan::zeros(sys.num_gens(), sys.horizon);
    for g in 0..sys.num_gens() {
        for t in 0..sys.horizon {
            y.up[g][t] = rng.random_range(0.0..40.0);
            y.down[g][t] = rng.random_range(0.0..40.0);
        }
    }
    y
}

/// Admissibility of a re-dispatch written straight from the network
/// equations: balance, line limits and reserve caps.
fn admissible(sys: &PowerSystem, x: &CommitmentSchedule, u: &[f64], y: &RedispatchPlan, tol: f64) -> bool {
    for t in 0..sys.horizon {
        let out: Vec<f64> = (0..sys.num_gens()).map(|g| x.p[g][t] + y.up[g][t] - y.down[g][t]).collect();
        if (out.iter().sum::<f64>() - sys.period_load(u, t)).abs() > tol {
            return false;
        }
        for (l, line) in sys.lines.iter().enumerate() {
            let flow: f64 = (0..sys.num_gens()).map(|g| sys.ptdf.gen[l][g] * out[g]).sum::<f64>()
                - (0..sys.num_buses()).map(|i| sys.ptdf.bus[l][i] * u[sys.load_index(i, t)]).sum::<f64>();
            if flow.abs() > line.capacity + tol {
                return false;
            }
        }
        for g in 0..sys.num_gens() {
            let ok = |v: f64, cap: f64| v >= -tol && v <= cap + tol;
            if !ok(y.up[g][t], x.r_up[g][t]) || !ok(y.down[g][t], x.r_down[g][t]) {
                return false;
            }
        }
    }
    true
}

#[test]
fn compact_recourse_matches_direct_lp() {
    let sys = triangle(3, 60.0);
    let ct = CompactTwoStage::build(&sys);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut feasible, mut infeasible) = (0, 0);
    for _ in 0..100 {
        let x = random_schedule(&sys, &mut rng);
        let u: Vec<f64> = (0..sys.load_dim()).map(|_| rng.random_range(0.0..80.0)).collect();
        let direct = solve_lp(&recourse_lp(&sys, &x, &u).0);
        let compact = solve_lp(&ct.recourse_lp(&ct.x_vector(&x), &u));
        assert_eq!(direct.status == Status::Optimal, compact.status == Status::Optimal);
        if direct.status == Status::Optimal {
            feasible += 1;
            assert!((direct.objective - compact.objective).abs() <= 1e-7 * (1.0 + direct.objective.abs()));
        } else {
            infeasible += 1;
        }
    }
    // both outcomes were exercised
    assert!(feasible > 5 && infeasible > 5, "{feasible} feasible, {infeasible} infeasible");
}

#[test]
fn compact_costs_equal_direct_costs() {
    let sys = triangle(4, 80.0);
    let ct = CompactTwoStage::build(&sys);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let x = random_schedule(&sys, &mut rng);
        let direct = predispatch_cost(&sys, &x);
        assert!((ct.pre_cost(&ct.x_vector(&x)) - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
        let y = random_plan(&sys, &mut rng);
        let direct = redispatch_cost(&sys, &y);
        assert!((ct.re_cost(&ct.y_vector(&y)) - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
    }
}

#[test]
fn compact_residuals_agree_with_direct_admissibility() {
    let sys = triangle(2, 60.0);
    let ct = CompactTwoStage::build(&sys);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut inside, mut outside, mut trials) = (0, 0, 0);
    while trials < 100 {
        let x = random_schedule(&sys, &mut rng);
        let u: Vec<f64> = (0..sys.load_dim()).map(|_| rng.random_range(0.0..60.0)).collect();
        let Some((_, mut y)) = recourse_value(&sys, &x, &u) else { continue };
        trials += 1;
        // shift output between the two units, which keeps the balance but may
        // break a reserve cap or a line limit
        if trials % 2 == 0 {
            let t = rng.random_range(0..sys.horizon);
            let d = rng.random_range(0.0..20.0);
            y.up[0][t] += d;
            y.up[1][t] -= d;
        }
        let res = ct.residuals(&ct.x_vector(&x), &u, &ct.y_vector(&y));
        let compact_ok = res.iter().all(|r| *r >= -1e-7) && ct.y_vector(&y).iter().all(|v| *v >= -1e-7);
        let direct_ok = admissible(&sys, &x, &u, &y, 1e-7);
        assert_eq!(compact_ok, direct_ok, "trial {trials}");
        if direct_ok {
            inside += 1;
        } else {
            outside += 1;
        }
    }
    assert!(inside > 10 && outside > 10, "{inside} inside, {outside} outside");
}

#[test]
fn admissible_redispatch_never_breaks_ramps() {
    let sys = ramp_limited(4);
    let pairs = sample_admissible_pairs(&sys, 200, 9);
    let (mut violations, mut adjusted) = (0, 0);
    for (x, u, y) in &pairs {
        assert!(admissible(&sys, x, u, y, 1e-6));
        violations += check_ramp_feasibility(&sys, x, y).len();
        adjusted += usize::from(y.up.iter().chain(&y.down).flatten().any(|v| *v > 1e-6));
    }
    assert_eq!(violations, 0);
    assert!(adjusted >= 150, "only {adjusted} draws moved any unit");
}

#[test]
fn exceeding_reserve_breaks_ramp_on_a_hand_pair() {
    let mut gen = generator(1, 0.0, 100.0, 10.0);
    gen.k_plus = 10.0;
    gen.k_minus = 10.0;
    let sys = single_bus(vec![gen], 2);
    let mut x = CommitmentSchedule::zeros(1, 2);
    x.theta[0] = vec![1.0, 1.0];
    x.start[0][0] = 1.0;
    x.p[0] = vec![50.0, 55.0];
    x.r_up[0] = vec![0.0, 5.0];
    let mut y = RedispatchPlan::zeros(1, 2);
    assert!(check_ramp_feasibility(&sys, &x, &y).is_empty());
    y.up[0][1] = 8.0;
    let v = check_ramp_feasibility(&sys, &x, &y);
    assert_eq!(v.len(), 1);
    assert!((v[0].residual - 3.0).abs() < 1e-12);
}

/// Every on/off pattern of one unit with minimum up time 3 over 5 periods,
/// classified by brute force against the schedule validator.
#[test]
fn min_up_patterns_match_enumeration() {
    let mut gen = generator(1, 0.0, 100.0, 10.0);
    gen.t_up = 3;
    let backup = generator(1, 0.0, 100.0, 50.0);
    let sys = single_bus(vec![gen, backup], 5);
    let load = vec![20.0; 5];
    for mask in 0u32..32 {
        let on: Vec<bool> = (0..5).map(|t| mask >> t & 1 == 1).collect();
        let mut x = CommitmentSchedule::zeros(2, 5);
        for t in 0..5 {
            x.theta[0][t] = f64::from(on[t] as u8);
            x.theta[1][t] = 1.0;
            x.p[0][t] = if on[t] { 20.0 } else { 0.0 };
            x.p[1][t] = 20.0 - x.p[0][t];
        }
        x.derive_transitions(&[0, 0]);
        // a run that starts at t must stay on through min(t + 2, T − 1)
        let expect_ok = (0..5).all(|t| {
            let starts = on[t] && (t == 0 || !on[t - 1]);
            !starts || (t..(t + 3).min(5)).all(|k| on[k])
        });
        let bad = validate_schedule(&sys, &load, &x).unwrap().iter().any(|v| v.constraint.starts_with("min_up"));
        assert_eq!(!bad, expect_ok, "pattern {on:?}");
    }
}

#[test]
fn predispatch_optimum_is_a_valid_schedule() {
    let sys = ramp_limited(4);
    let load = vec![30.0, 40.0, 35.0, 50.0, 60.0, 45.0, 40.0, 30.0, 55.0, 20.0, 25.0, 30.0];
    let model = build_predispatch_constraints(&sys, &load).unwrap();
    let rep = solve_milp(&model.lp, &MilpOptions::default());
    assert_eq!(rep.status, Status::Optimal);
    let x = model.index.read(&rep.primal);
    assert!(validate_schedule(&sys, &load, &x).unwrap().is_empty());
    assert!((predispatch_cost(&sys, &x) - rep.objective).abs() <= 1e-6 * (1.0 + rep.objective.abs()));
    for g in 0..sys.num_gens() {
        for t in 0..sys.horizon {
            let prev = if t == 0 { f64::from(sys.generators[g].theta0) } else { x.theta[g][t - 1] };
            assert!((x.theta[g][t] - prev - (x.start[g][t] - x.stop[g][t])).abs() < 1e-9);
        }
    }
    let mut bad = x.clone();
    bad.p[0][0] += 7.0;
    assert!(validate_schedule(&sys, &load, &bad).unwrap().iter().any(|v| v.constraint.starts_with("balance")));
}

#[test]
fn system_json_rejects_bad_documents() {
    let sys = triangle(2, 50.0);
    let text = sys.to_json_string();
    assert_eq!(PowerSystem::from_json_str(&text).unwrap(), sys);
    assert!(PowerSystem::from_json_str(&text.replace("\"horizon\": 2", "\"horizon\": 0")).is_err());
    assert!(PowerSystem::from_json_str("{\"horizon\": 2}").is_err());
    assert!(sys.check_load(&[1.0; 5]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transitions_follow_commitment(bits in proptest::collection::vec(any::<bool>(), 6), theta0 in 0u8..2) {
        let mut x = CommitmentSchedule::zeros(1, 6);
        for (t, b) in bits.iter().enumerate() {
            x.theta[0][t] = f64::from(*b as u8);
        }
        x.derive_transitions(&[theta0]);
        let mut prev = f64::from(theta0);
        for t in 0..6 {
            prop_assert_eq!(x.theta[0][t] - prev, x.start[0][t] - x.stop[0][t]);
            prop_assert!(x.start[0][t] * x.stop[0][t] == 0.0);
            prev = x.theta[0][t];
        }
    }

    #[test]
    fn redispatch_cost_is_linear(a in 0.0f64..50.0, b in 0.0f64..50.0, s in 0.0f64..3.0) {
        let sys = triangle(2, 50.0);
        let mut y = RedispatchPlan::zeros(2, 2);
        y.up[0][1] = a;
        y.down[1][0] = b;
        let base = redispatch_cost(&sys, &y);
        prop_assert!((base - (a * sys.generators[0].rho_plus + b * sys.generators[1].rho_minus)).abs() < 1e-9);
        y.up[0][1] *= s;
        y.down[1][0] *= s;
        prop_assert!((redispatch_cost(&sys, &y) - s * base).abs() < 1e-9 * (1.0 + base));
    }
}

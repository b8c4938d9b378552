mod common;

use common::*;
use ruc_core::robust::*;
use ruc_core::system::{predispatch_cost, recourse_value, PowerSystem};
use ruc_core::uncertainty::{BoxSet, UncertaintySet};
use std::time::Instant;

/// Worst re-dispatch cost over the box corners. The optimal re-dispatch cost
/// is convex in the load, so its maximum over a box sits at a corner.
fn corner_oracle(sys: &PowerSystem, x: &ruc_core::system::CommitmentSchedule, b: &BoxSet) -> f64 {
    b.vertices()
        .iter()
        .map(|u| recourse_value(sys, x, u).map_or(f64::INFINITY, |(v, _)| v))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn forecast() -> Vec<f64> {
    // bus-major: bus 1 (t0, t1), bus 2, bus 3
    vec![10.0, 12.0, 30.0, 35.0, 60.0, 70.0]
}

#[test]
fn box_worst_case_matches_corner_enumeration() {
    let sys = triangle(2, 60.0);
    let u = forecast();
    let totals = [100.0, 117.0];
    let b = scaled_box(&u, 0.9, 1.1);
    let opts = SubproblemOptions::default();
    for (shares, r) in [([0.7, 0.3], 20.0), ([0.5, 0.5], 15.0), ([0.9, 0.1], 12.0), ([0.6, 0.4], 5.0)] {
        let x = flat_schedule(&sys, &totals, &shares, r, r);
        let start = Instant::now();
        let res = worst_case_subproblem(&sys, &x, &UncertaintySet::Box(b.clone()), &opts).unwrap();
        let oracle = corner_oracle(&sys, &x, &b);
        eprintln!("shares {shares:?} r {r}: kkt {} ({:?}) oracle {oracle} nodes {} in {:?}", res.value, res.status, res.nodes, start.elapsed());
        if oracle.is_infinite() {
            assert_eq!(res.status, SubproblemStatus::Infeasible);
            assert!(recourse_value(&sys, &x, &res.load).is_none());
        } else {
            assert_eq!(res.status, SubproblemStatus::Optimal);
            assert!((res.value - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()), "{} vs {oracle}", res.value);
            assert!((res.kkt_value - res.value).abs() <= 1e-6 * (1.0 + oracle.abs()));
            assert!(res.flags.is_empty(), "{:?}", res.flags);
        }
    }
}

#[test]
fn box_robust_solution_survives_every_corner() {
    let sys = triangle(2, 60.0);
    let u = forecast();
    let b = scaled_box(&u, 0.9, 1.1);
    let start = Instant::now();
    let sol = solve_two_stage_robust(&sys, &u, &UncertaintySet::Box(b.clone()), &CcgOptions::default()).unwrap();
    for l in &sol.state.log {
        eprintln!("{}", l.to_json_line());
    }
    eprintln!("solved in {:?}", start.elapsed());
    assert!(sol.state.converged());
    let oracle = corner_oracle(&sys, &sol.schedule, &b);
    assert!(oracle.is_finite());
    assert!((sol.worst_case - oracle).abs() <= 1e-6 * (1.0 + oracle));
    assert!((sol.pre_cost - predispatch_cost(&sys, &sol.schedule)).abs() < 1e-9);
    assert!(sol.state.lb <= sol.state.ub + 1e-9);
}

fn two_period_ellipse(alpha: f64) -> (PowerSystem, ruc_core::uncertainty::EllipsoidCapSet) {
    use nalgebra::DMatrix;
    let sys = single_bus(vec![generator(1, 10.0, 120.0, 20.0), generator(1, 0.0, 60.0, 40.0)], 2);
    let b = BoxSet::new(vec![0.0; 2], vec![400.0; 2]).unwrap();
    let cov = DMatrix::from_row_slice(2, 2, &[100.0, 60.0, 60.0, 81.0]);
    let e = ruc_core::uncertainty::EllipsoidCapSet::new(b, vec![90.0, 110.0], cov, alpha).unwrap();
    (sys, e)
}

#[test]
fn ellipsoid_worst_case_matches_boundary_scan() {
    for alpha in [0.5, 2.0, 4.0] {
        let (sys, e) = two_period_ellipse(alpha);
        let x = flat_schedule(&sys, &[90.0, 110.0], &[0.75, 0.25], 30.0, 30.0);
        let mut scan = f64::NEG_INFINITY;
        for k in 0..20_000 {
            let ang = k as f64 * std::f64::consts::TAU / 20_000.0;
            let d = [ang.cos(), ang.sin()];
            let s = (alpha / e.radius_of(&[90.0 + d[0], 110.0 + d[1]])).sqrt();
            let u = [90.0 + s * d[0], 110.0 + s * d[1]];
            scan = scan.max(recourse_value(&sys, &x, &u).map_or(f64::INFINITY, |(v, _)| v));
        }
        let opts = SubproblemOptions::default();
        let res = worst_case_subproblem(&sys, &x, &UncertaintySet::Ellipsoid(e.clone()), &opts).unwrap();
        eprintln!("alpha {alpha}: kkt {} scan {scan} nodes {}", res.value, res.nodes);
        assert_eq!(res.status, SubproblemStatus::Optimal);
        assert!(e.radius_of(&res.load) <= alpha * (1.0 + opts.radius_tol) + 1e-9);
        assert!(res.value >= scan - 1e-6 * (1.0 + scan), "{} < {scan}", res.value);
        assert!(res.value <= scan + 1e-3 * (1.0 + scan), "{} > {scan}", res.value);
    }
}

#[test]
fn ellipsoid_cut_separates_and_is_valid() {
    let (_, e) = two_period_ellipse(2.0);
    let outside = [120.0, 90.0];
    let cut = ellipsoid_cut(&e, &outside, 1e-6).expect("point is outside");
    assert!(cut.activity(&outside) > cut.rhs);
    for k in 0..360 {
        let ang = k as f64 * std::f64::consts::PI / 180.0;
        let d = [ang.cos(), ang.sin()];
        let s = (2.0 / e.radius_of(&[90.0 + d[0], 110.0 + d[1]])).sqrt();
        assert!(cut.activity(&[90.0 + s * d[0], 110.0 + s * d[1]]) <= cut.rhs + 1e-9);
    }
    assert!(ellipsoid_cut(&e, &[90.0, 110.0], 1e-6).is_none());
}

#[test]
fn cost_level_worst_case_of_anchor_is_the_level() {
    use ruc_core::uncertainty::reconstruct_set;
    let sys = triangle(2, 60.0);
    let u = forecast();
    let b = scaled_box(&u, 0.8, 1.2);
    let x = flat_schedule(&sys, &[100.0, 117.0], &[0.7, 0.3], 20.0, 20.0);
    // deterministic spread of held-out errors
    let errors: Vec<Vec<f64>> = (0..80)
        .map(|n| (0..6).map(|k| u[k] * 0.08 * (((n * 7 + k * 3) % 11) as f64 / 5.0 - 1.0)).collect())
        .collect();
    let rec = reconstruct_set(&sys, &x, &u, &errors, 0.05, 0.05, b).unwrap();
    assert!(rec.set.beta.is_finite());
    let res = worst_case_subproblem(&sys, &x, &UncertaintySet::CostLevel(rec.set.clone()), &SubproblemOptions::default()).unwrap();
    eprintln!("beta {} worst {}", rec.set.beta, res.value);
    assert_eq!(res.status, SubproblemStatus::Optimal);
    assert!((res.value - rec.set.beta).abs() <= 1e-6 * (1.0 + rec.set.beta));
    assert!(rec.set.contains(&res.load));
}

#[test]
fn feasibility_subproblem_reports_shortfall() {
    let sys = single_bus(vec![generator(1, 0.0, 100.0, 10.0)], 1);
    let x = flat_schedule(&sys, &[50.0], &[1.0], 5.0, 5.0);
    let b = BoxSet::new(vec![40.0], vec![58.0]).unwrap();
    let res = feasibility_subproblem(&sys, &x, &UncertaintySet::Box(b), &SubproblemOptions::default()).unwrap();
    // 5 MW of reserve each way: 40 leaves 5 MW excess, 58 leaves 3 MW short
    assert_eq!(res.status, SubproblemStatus::Infeasible);
    assert!((res.violation - 5.0).abs() < 1e-7, "{}", res.violation);
    assert!((res.load[0] - 40.0).abs() < 1e-7);
}

#[test]
fn blockwise_feasibility_returns_an_infeasible_member() {
    use ruc_core::pipeline::{synthesize, SyntheticSpec};
    use ruc_core::uncertainty::{build_ellipsoid_variant, EllipsoidMode};
    let spec = SyntheticSpec::three_bus(3, 60);
    let data = synthesize(&spec, 3).unwrap();
    let errors: Vec<Vec<f64>> = data.shared_errors[..40].to_vec();
    let forecast = spec.base_load.clone();
    let bounds = BoxSet::new(spec.lower.clone(), spec.upper.clone()).unwrap();
    let e = build_ellipsoid_variant(&forecast, &errors, EllipsoidMode::All, bounds).unwrap();
    // a schedule that follows the forecast with thin reserves
    let totals: Vec<f64> = (0..3).map(|t| spec.system.period_load(&forecast, t)).collect();
    let x = flat_schedule(&spec.system, &totals, &[0.7, 0.3], 2.0, 2.0);
    let opts = SubproblemOptions::default();
    let res = feasibility_subproblem(&spec.system, &x, &UncertaintySet::Ellipsoid(e.clone()), &opts).unwrap();
    assert_eq!(res.status, SubproblemStatus::Infeasible);
    assert!(e.radius_of(&res.load) <= e.alpha * (1.0 + opts.radius_tol) + 1e-9);
    assert!(e.bounds.contains(&res.load));
    assert!(recourse_value(&spec.system, &x, &res.load).is_none());
}

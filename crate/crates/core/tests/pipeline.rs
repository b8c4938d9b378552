mod common;

use common::{generator, single_bus};
use ruc_core::pipeline::*;
use ruc_core::surrogate::{TrainingRow, TrainingTable, WeightVector};
use ruc_core::system::CommitmentSchedule;
use ruc_core::uncertainty::{build_ellipsoid_set, coverage, BoxSet, ErrorSplit, ProfileTable, UncertaintySet};
use ruc_core::CoreError;
use std::path::Path;

fn splits() -> SplitSizes {
    SplitSizes {
        shape: 40,
        size: 30,
        reconstruction: 0,
        evaluation: 10,
        training: 2,
        test: 40,
    }
}

fn config_for(files: &CaseFiles, splits: SplitSizes) -> CaseConfig {
    CaseConfig::for_files(files.system.clone(), files.truth.clone(), files.forecasts.clone(), Some(files.bounds.clone()), splits, 5)
}

fn in_memory_case(horizon: usize, days: usize, seed: u64, splits: SplitSizes) -> Case {
    let spec = SyntheticSpec::three_bus(horizon, days);
    let data = synthesize(&spec, seed).unwrap();
    let cfg = CaseConfig::for_files("system.json".into(), "truth.csv".into(), vec!["f.csv".into(); 3], None, splits, seed);
    let bounds = BoxSet::new(spec.lower.clone(), spec.upper.clone()).unwrap();
    Case::from_tables(cfg, spec.system, &data.truth, &data.forecasts, Some(bounds)).unwrap()
}

fn read_all(files: &CaseFiles) -> Vec<Vec<u8>> {
    let mut paths = vec![&files.system, &files.truth, &files.bounds, &files.spec];
    paths.extend(&files.forecasts);
    paths.into_iter().map(|p| std::fs::read(p).unwrap()).collect()
}

#[test]
fn seeded_generation_is_byte_identical() {
    let spec = SyntheticSpec::three_bus(3, 20);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = generate_synthetic_case(&spec, 11, a.path()).unwrap();
    let fb = generate_synthetic_case(&spec, 11, b.path()).unwrap();
    assert_eq!(read_all(&fa), read_all(&fb));
    let c = tempfile::tempdir().unwrap();
    let fc = generate_synthetic_case(&spec, 12, c.path()).unwrap();
    assert_ne!(read_all(&fa)[1], read_all(&fc)[1]);
}

#[test]
fn generated_error_covariance_converges() {
    let spec = SyntheticSpec::three_bus(3, 2000);
    let data = synthesize(&spec, 3).unwrap();
    let n = spec.base_load.len();
    let k = data.shared_errors.len() as f64;
    let mean: Vec<f64> = (0..n).map(|i| data.shared_errors.iter().map(|e| e[i]).sum::<f64>() / k).collect();
    let target = spec.covariance();
    let (mut diff, mut norm) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let c = data.shared_errors.iter().map(|e| (e[i] - mean[i]) * (e[j] - mean[j])).sum::<f64>() / (k - 1.0);
            diff += (c - target[(i, j)]).powi(2);
            norm += target[(i, j)].powi(2);
        }
    }
    let rel = (diff / norm).sqrt();
    assert!(rel <= 0.10, "relative Frobenius error {rel}");
}

#[test]
fn method_rmses_follow_their_profiles() {
    let spec = SyntheticSpec::three_bus(3, 1500);
    let data = synthesize(&spec, 4).unwrap();
    let mut rmse = vec![];
    for f in &data.forecasts {
        let (mut s, mut c) = (0.0, 0.0);
        for (day, (pred, truth)) in f.rows.iter().zip(&data.truth.rows).enumerate() {
            for i in 0..pred.len() {
                // prediction error beyond the shared error is bias + noise
                let r = truth[i] - pred[i] - data.shared_errors[day][i];
                s += r * r;
                c += 1.0;
            }
        }
        rmse.push((s / c).sqrt());
    }
    for (m, p) in spec.methods.iter().enumerate() {
        let expect = (p.bias * p.bias + p.noise_sd * p.noise_sd).sqrt();
        assert!((rmse[m] - expect).abs() <= 0.03 * expect, "method {m}: {} vs {expect}", rmse[m]);
    }
    assert!(rmse[0] < rmse[1] && rmse[1] < rmse[2], "{rmse:?}");
}

#[test]
fn shipped_style_case_loads_with_declared_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec::three_bus(3, 150);
    let files = generate_synthetic_case(&spec, 1, dir.path()).unwrap();
    let case = load_case(&config_for(&files, splits())).unwrap();
    assert_eq!(case.sys.num_buses(), 3);
    assert_eq!(case.sys.horizon, 3);
    assert_eq!(case.days.len(), 150);
    assert_eq!(case.num_methods(), 3);
    assert_eq!(case.target, splits().total());
    let w = WeightVector::uniform(3);
    let shape = case.errors(ErrorSplit::Shape, &w).unwrap();
    assert_eq!(shape.len(), 40);
    assert_eq!(shape.days, (0..40).collect::<Vec<i64>>());
    assert_eq!(case.errors(ErrorSplit::Test, &w).unwrap().days.first(), Some(&82));
    assert_eq!(case.bounds.lower, spec.lower);
}

fn truncate_line(path: &Path, line: usize) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let cut = lines[line - 1].rfind(',').unwrap();
    lines[line - 1].truncate(cut);
    std::fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn truncated_csv_row_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let files = generate_synthetic_case(&SyntheticSpec::three_bus(3, 150), 1, dir.path()).unwrap();
    truncate_line(&files.forecasts[1], 7);
    match load_case(&config_for(&files, splits())) {
        Err(CoreError::Csv { path, line, .. }) => {
            assert_eq!(line, 7);
            assert!(path.ends_with("forecast_1.csv"), "{path}");
        }
        other => panic!("expected a CSV error, got {other:?}"),
    }
}

#[test]
fn splits_larger_than_the_history_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let files = generate_synthetic_case(&SyntheticSpec::three_bus(2, 300), 1, dir.path()).unwrap();
    let big = SplitSizes {
        shape: 212,
        size: 124,
        reconstruction: 0,
        evaluation: 0,
        training: 0,
        test: 0,
    };
    assert!(matches!(load_case(&config_for(&files, big)), Err(CoreError::NotEnoughData(_))));
    let mut cfg = config_for(&files, splits());
    cfg.target_day = Some(10);
    assert!(matches!(load_case(&cfg), Err(CoreError::InvalidParameter(_))));
    cfg.target_day = None;
    cfg.eps = 1.0;
    assert!(load_case(&cfg).is_err());
}

#[test]
fn mismatched_forecast_days_are_rejected() {
    let spec = SyntheticSpec::three_bus(2, 150);
    let data = synthesize(&spec, 2).unwrap();
    let mut forecasts = data.forecasts.clone();
    forecasts[2].days[5] = 999;
    let cfg = CaseConfig::for_files("s".into(), "t".into(), vec!["f".into(); 3], None, splits(), 2);
    assert!(Case::from_tables(cfg, spec.system, &data.truth, &forecasts, None).is_err());
}

#[test]
fn reconstruction_split_is_disjoint_when_requested() {
    let strict = SplitSizes {
        reconstruction: 25,
        ..splits()
    };
    let case = in_memory_case(2, 200, 3, strict);
    assert_eq!(case.layout.reconstruction, 70..95);
    assert_eq!(case.level_days().len(), 25);
    assert_eq!(case.training_setup().size.len(), 25);
    let reuse = in_memory_case(2, 200, 3, splits());
    assert_eq!(reuse.level_days().len(), 30);
}

#[test]
fn full_reserves_are_always_feasible() {
    let mut g = generator(1, 0.0, 1000.0, 20.0);
    g.r_plus_max = 500.0;
    g.r_minus_max = 500.0;
    let sys = single_bus(vec![g], 2);
    let forecast = vec![100.0, 120.0];
    let mut x = CommitmentSchedule::zeros(1, 2);
    for t in 0..2 {
        x.theta[0][t] = 1.0;
        x.p[0][t] = forecast[t];
        x.r_up[0][t] = 500.0;
        x.r_down[0][t] = 100.0;
    }
    x.start[0][0] = 1.0;
    let errors: Vec<Vec<f64>> = (0..50).map(|k| vec![(k as f64 - 25.0) * 2.0, (k as f64 % 7.0) * 10.0 - 30.0]).collect();
    let bounds = BoxSet::new(vec![0.0; 2], vec![400.0; 2]).unwrap();
    let out = evaluate_out_of_sample(&sys, &x, &forecast, &errors, &[110.0, 95.0], &bounds).unwrap();
    assert_eq!(out.feasible_rate, 1.0);
    assert!(out.realized_feasible);
    // the realized re-dispatch moves 10 up then 25 down
    let pre = ruc_core::system::predispatch_cost(&sys, &x);
    let expect = pre + 10.0 * sys.generators[0].rho_plus + 25.0 * sys.generators[0].rho_minus;
    assert!((out.test_cost - expect).abs() < 1e-6, "{} vs {expect}", out.test_cost);

    assert!(matches!(evaluate_out_of_sample(&sys, &x, &forecast, &[], &[110.0, 95.0], &bounds), Err(CoreError::NotEnoughData(_))));
}

#[test]
fn calibrated_radius_shrinks_as_eps_grows() {
    let case = in_memory_case(3, 200, 8, splits());
    let w = WeightVector::uniform(3);
    let shape = case.errors(ErrorSplit::Shape, &w).unwrap().samples;
    let size = case.errors(ErrorSplit::Size, &w).unwrap().samples;
    let forecast = vec![0.0; 9];
    let alphas: Vec<f64> = [0.08, 0.1, 0.2, 0.3, 0.5]
        .iter()
        .map(|&eps| build_ellipsoid_set(&forecast, &shape, &size, eps, 0.1, case.bounds.clone()).unwrap().alpha)
        .collect();
    assert!(alphas.windows(2).all(|p| p[0] >= p[1]), "{alphas:?}");
}

#[test]
fn outside_fraction_grows_with_delta() {
    let case = in_memory_case(3, 200, 8, splits());
    let w = WeightVector::uniform(3);
    let shape = case.errors(ErrorSplit::Shape, &w).unwrap().samples;
    let size = case.errors(ErrorSplit::Size, &w).unwrap().samples;
    let test = case.errors(ErrorSplit::Test, &w).unwrap().samples;
    let forecast = ruc_core::surrogate::combine_forecasts(case.target_bundle(), &w).unwrap();
    let loads: Vec<Vec<f64>> = test.iter().map(|e| forecast.iter().zip(e).map(|(a, b)| a + b).collect()).collect();
    let outside: Vec<f64> = [0.01, 0.05, 0.1, 0.3, 0.6]
        .iter()
        .map(|&delta| {
            let e = build_ellipsoid_set(&forecast, &shape, &size, 0.2, delta, case.bounds.clone()).unwrap();
            1.0 - coverage(&UncertaintySet::Ellipsoid(e), &loads)
        })
        .collect();
    assert!(outside.windows(2).all(|p| p[0] <= p[1]), "{outside:?}");
}

#[test]
fn variant_matrix_is_enforced() {
    use Variant::*;
    let reconstructs: Vec<Variant> = Variant::ALL.into_iter().filter(|v| !v.reconstructs()).collect();
    assert_eq!(reconstructs, vec![Ro1, Ro2, P1]);
    let uncalibrated: Vec<Variant> = Variant::ALL.into_iter().filter(|v| !v.calibrated()).collect();
    assert_eq!(uncalibrated, vec![Ro1, Ro2]);
    let focused: Vec<Variant> = Variant::ALL.into_iter().filter(|v| v.decision_focused()).collect();
    assert_eq!(focused, vec![P1, Proposed, Pso]);
    assert_eq!(P2.weight_rule(), WeightRule::Mse);
    assert_eq!(Proposed.weight_rule(), WeightRule::SurrogateMilp);
    assert_eq!(Pso.weight_rule(), WeightRule::SurrogatePso);
    for v in Variant::ALL {
        assert_eq!(Variant::parse(v.name()).unwrap(), v);
        assert_eq!(serde_json::to_string(&v).unwrap(), format!("\"{}\"", v.name()));
    }
    assert!(Variant::parse("SP").is_err());
}

#[test]
fn p2_and_proposed_share_the_code_path() {
    let case = in_memory_case(2, 200, 6, splits());
    let w = WeightVector::new(vec![0.2, 0.5, 0.3]).unwrap();
    let a = run_method_with_weight(&case, Variant::P2, &w).unwrap();
    let b = run_method_with_weight(&case, Variant::Proposed, &w).unwrap();
    assert_eq!(a.objective, b.objective);
    assert_eq!(a.schedule, b.schedule);
    assert_eq!(a.beta, b.beta);
    assert_eq!(a.feasible_rate, b.feasible_rate);
    assert_eq!(a.set_kind, "cost_level");
    assert!(matches!(run_method(&case, Variant::Proposed, None), Err(CoreError::InvalidParameter(_))));
}

#[test]
fn run_reports_are_deterministic_and_round_trip() {
    let case = in_memory_case(2, 200, 6, splits());
    let a = run_method(&case, Variant::Ro2, None).unwrap();
    let mut b = run_method(&case, Variant::Ro2, None).unwrap();
    b.wall_time = a.wall_time;
    assert_eq!(a.to_json_string(), b.to_json_string());
    assert!((0.0..=1.0).contains(&a.feasible_rate));
    assert!(a.converged);
    let back = RunReport::from_json_str(&a.to_json_string()).unwrap();
    assert_eq!(back.to_json_string(), a.to_json_string());
    assert_eq!(a.log_lines().lines().count(), a.log.len());
    let ro1 = run_method(&case, Variant::Ro1, None).unwrap();
    assert!(ro1.alpha >= a.alpha);
    assert!(ro1.objective >= a.objective - 1e-4 * (1.0 + a.objective.abs()));
}

#[test]
fn sweep_keeps_going_past_failing_points() {
    let case = in_memory_case(2, 200, 6, splits());
    let rows = sweep(&case, Variant::Ro2, SweepParameter::SizeSamples, &[30.0, 5000.0, 2.5], None).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].error.is_none() && rows[0].objective.is_some());
    assert!(rows[1].error.is_some() && rows[1].objective.is_none());
    assert!(rows[2].error.is_some());
    let text = sweep_to_csv(&rows);
    assert_eq!(sweep_from_csv(&text, "sweep.csv").unwrap(), rows);
}

#[test]
fn weight_grid_sweep_emits_one_row_per_grid_point() {
    let case = in_memory_case(2, 200, 6, splits());
    let rows = sweep(&case, Variant::P2, SweepParameter::WeightGrid, &[0.5], None).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.error.is_none()));
    assert_eq!(rows[0].value, "1;0;0");
    assert!(sweep(&case, Variant::P2, SweepParameter::WeightGrid, &[0.5, 0.25], None).is_err());
    assert!(SweepParameter::parse("size_samples").is_ok());
    assert!(SweepParameter::parse("gamma").is_err());
}

#[test]
fn emitted_csvs_round_trip() {
    let data = synthesize(&SyntheticSpec::three_bus(2, 12), 9).unwrap();
    let text = data.truth.to_csv_string();
    assert_eq!(ProfileTable::from_csv_str(&text, 3, 2, "truth.csv").unwrap(), data.truth);
    let table = TrainingTable {
        n_components: 2,
        n_methods: 3,
        rows: vec![TrainingRow {
            day: 4,
            features: vec![0.1 + 0.2, -1e-17],
            weights: WeightVector::new(vec![0.1, 0.6, 0.3]).unwrap(),
            pre_cost: 1234.5678,
            cost: 9876.54321,
        }],
    };
    assert_eq!(TrainingTable::from_csv_str(&table.to_csv_string(), 2, 3, "t.csv").unwrap(), table);
}

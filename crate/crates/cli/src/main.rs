//! Command-line front end: generate cases, train the surrogate, commit a day
//! with one of the compared methods, score it, and sweep settings.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ruc_core::pipeline::{
    evaluate_out_of_sample, generate_synthetic_case, load_case, run_method, select_weight, sweep, sweep_to_csv, train_case_surrogate, write_atomic,
    Case, CaseConfig, RunReport, SplitSizes, SweepParameter, SyntheticSpec, Variant, WeightRule,
};
use ruc_core::surrogate::{combine_forecasts, surrogate_milp_value, SurrogateModel, WeightVector};
use ruc_core::uncertainty::ErrorSplit;
use ruc_core::CoreError;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "ruc", about = "Data-driven robust unit commitment with decision-focused forecast weighting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic three-bus case and a matching case config.
    Gen(GenArgs),
    /// Build training rows for the case and fit the cost surrogate.
    TrainSurrogate(TrainArgs),
    /// Choose the combination weight for the target day.
    OptimizeWeights(WeightArgs),
    /// Commit the target day with one method and write its report.
    Solve(SolveArgs),
    /// Re-score the schedule of a report on the case's test split.
    Evaluate(EvaluateArgs),
    /// Re-run one method over values of one setting.
    Sweep(SweepArgs),
    /// Collect run reports into one CSV table.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    horizon: usize,
    #[arg(long, default_value_t = 300)]
    days: usize,
    #[arg(long)]
    seed: u64,
}

/// Case config file plus overrides of its fields.
#[derive(Args)]
struct CaseArgs {
    /// Case config JSON, as written by `gen`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    target_day: Option<usize>,
    /// Relative C&CG gap.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Size of a disjoint split for the reconstructed set's level; 0 reuses
    /// the size split.
    #[arg(long)]
    reconstruction: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write the training rows as CSV.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightMethod {
    Milp,
    Pso,
    Mse,
}

#[derive(Args)]
struct WeightArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long)]
    surrogate: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "milp")]
    method: WeightMethod,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// RO1, RO2, P1, P2, PROPOSED or PSO.
    #[arg(long)]
    variant: String,
    #[arg(long)]
    surrogate: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration C&CG log as JSON lines.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long)]
    variant: String,
    /// eps, delta, size_samples or weight_grid.
    #[arg(long)]
    parameter: String,
    /// Comma-separated values; for weight_grid, the single grid step.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long)]
    surrogate: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes()).map_err(CliError::from)
}

fn load(args: &CaseArgs) -> Result<Case> {
    let text = read_text(&args.config)?;
    let mut cfg: CaseConfig = serde_json::from_str(&text).map_err(|source| CliError::Json { path: args.config.clone(), source })?;
    // relative paths in the config are relative to the config file
    let base = args.config.parent().unwrap_or(Path::new("."));
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    fix(&mut cfg.system);
    fix(&mut cfg.truth);
    cfg.forecasts.iter_mut().for_each(fix);
    if let Some(b) = cfg.bounds.as_mut() {
        fix(b);
    }
    if let Some(v) = args.eps {
        cfg.eps = v;
    }
    if let Some(v) = args.delta {
        cfg.delta = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.target_day {
        cfg.target_day = Some(v);
    }
    if let Some(v) = args.tolerance {
        cfg.tolerance = v;
    }
    if let Some(v) = args.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = args.reconstruction {
        cfg.splits.reconstruction = v;
    }
    Ok(load_case(&cfg)?)
}

fn load_surrogate(path: Option<&PathBuf>) -> Result<Option<SurrogateModel>> {
    path.map(|p| SurrogateModel::load(p).map_err(CliError::from)).transpose()
}

fn default_splits(days: usize) -> SplitSizes {
    // the benchmark layout, scaled down for short histories
    let s = SplitSizes {
        shape: 60,
        size: 60,
        reconstruction: 0,
        evaluation: 40,
        training: 6,
        test: 100,
    };
    if s.total() < days {
        return s;
    }
    let f = days as f64 / (s.total() as f64 + 1.0);
    let scale = |n: usize| ((n as f64 * f).floor() as usize).max(1);
    SplitSizes {
        shape: scale(s.shape),
        size: scale(s.size),
        reconstruction: 0,
        evaluation: scale(s.evaluation),
        training: scale(s.training),
        test: scale(s.test),
    }
}

fn gen(args: &GenArgs) -> Result<bool> {
    let spec = SyntheticSpec::three_bus(args.horizon, args.days);
    let files = generate_synthetic_case(&spec, args.seed, &args.out)?;
    let name = |p: &Path| PathBuf::from(p.file_name().expect("generated file has a name"));
    let cfg = CaseConfig::for_files(
        name(&files.system),
        name(&files.truth),
        files.forecasts.iter().map(|p| name(p)).collect(),
        Some(name(&files.bounds)),
        default_splits(args.days),
        args.seed,
    );
    let path = args.out.join("case.json");
    write(&path, &serde_json::to_string_pretty(&cfg).expect("config serializes"))?;
    println!("{}", path.display());
    Ok(true)
}

fn train(args: &TrainArgs) -> Result<bool> {
    let case = load(&args.case)?;
    let trained = train_case_surrogate(&case)?;
    write(&args.out, &trained.model.to_json_string())?;
    if let Some(p) = &args.table {
        write(p, &trained.table.to_csv_string())?;
    }
    let r = &trained.report;
    println!(
        "{}",
        serde_json::json!({
            "rows": trained.table.rows.len(),
            "train_loss": r.train_loss,
            "validation_loss": r.validation_loss,
            "epochs_run": r.epochs_run,
            "best_epoch": r.best_epoch,
        })
    );
    Ok(true)
}

fn optimize(args: &WeightArgs) -> Result<bool> {
    let case = load(&args.case)?;
    let model = load_surrogate(args.surrogate.as_ref())?;
    let rule = match args.method {
        WeightMethod::Milp => WeightRule::SurrogateMilp,
        WeightMethod::Pso => WeightRule::SurrogatePso,
        WeightMethod::Mse => WeightRule::Mse,
    };
    let day = case.target_bundle();
    let w = select_weight(&case, rule, day, model.as_ref())?;
    let predicted = match &model {
        Some(m) => Some(surrogate_milp_value(m, day, &w)?),
        None => None,
    };
    println!("{}", serde_json::json!({ "weight": w.0, "predicted_cost": predicted }));
    Ok(true)
}

fn solve(args: &SolveArgs) -> Result<bool> {
    let case = load(&args.case)?;
    let variant = Variant::parse(&args.variant)?;
    let model = load_surrogate(args.surrogate.as_ref())?;
    let report = run_method(&case, variant, model.as_ref())?;
    write(&args.out, &report.to_json_string())?;
    if let Some(p) = &args.log {
        write(p, &report.log_lines())?;
    }
    println!(
        "{} objective {:.4} feasible_rate {:.4} test_cost {:.4} converged {}",
        variant, report.objective, report.feasible_rate, report.test_cost, report.converged
    );
    Ok(report.converged)
}

fn evaluate(args: &EvaluateArgs) -> Result<bool> {
    let case = load(&args.case)?;
    let report = RunReport::from_json_str(&read_text(&args.report)?)?;
    let w = WeightVector::new(report.weight.clone())?;
    let day = case.target_bundle();
    let forecast = combine_forecasts(day, &w)?;
    let test = case.errors(ErrorSplit::Test, &w)?;
    let truth = day.truth.as_ref().ok_or_else(|| CliError::Usage("target day has no realized load".into()))?;
    let out = evaluate_out_of_sample(&case.sys, &report.schedule, &forecast, &test.samples, truth, &case.bounds)?;
    println!("{}", serde_json::to_string(&out).expect("scores serialize"));
    Ok(true)
}

fn run_sweep(args: &SweepArgs) -> Result<bool> {
    let case = load(&args.case)?;
    let variant = Variant::parse(&args.variant)?;
    let parameter = SweepParameter::parse(&args.parameter)?;
    let model = load_surrogate(args.surrogate.as_ref())?;
    let rows = sweep(&case, variant, parameter, &args.values, model.as_ref())?;
    write(&args.out, &sweep_to_csv(&rows))?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} rows, {failed} failed", rows.len());
    Ok(failed == 0)
}

fn report(args: &ReportArgs) -> Result<bool> {
    let mut w = String::from("variant,target_day,objective,feasible_rate,test_cost,points_outside,wall_time,converged\n");
    for p in &args.reports {
        let r = RunReport::from_json_str(&read_text(p)?)?;
        w.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.variant, r.target_day, r.objective, r.feasible_rate, r.test_cost, r.points_outside, r.wall_time, r.converged
        ));
    }
    match &args.out {
        Some(p) => write(p, &w)?,
        None => print!("{w}"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::TrainSurrogate(a) => train(a),
        Command::OptimizeWeights(a) => optimize(a),
        Command::Solve(a) => solve(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Report(a) => report(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

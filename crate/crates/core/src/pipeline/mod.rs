//! Cases on disk, the method variants compared in the benchmark,
//! out-of-sample evaluation and parameter sweeps.

mod case;
mod io;
mod methods;
mod sweep;
mod synthetic;

pub use case::{load_case, Case, CaseConfig, SplitLayout, SplitSizes, SurrogateSettings};
pub use io::write_atomic;
pub use methods::{
    build_training_table, evaluate_out_of_sample, run_method, run_method_with_weight, select_weight, train_case_surrogate, OutOfSample, RunReport,
    TrainedSurrogate, Variant, WeightRule,
};
pub use synthetic::{generate_synthetic_case, generator_template, synthesize, three_bus_system, CaseFiles, LoadBounds, MethodProfile, SyntheticData, SyntheticSpec};
pub use sweep::{sweep, sweep_from_csv, sweep_to_csv, SweepParameter, SweepRow};

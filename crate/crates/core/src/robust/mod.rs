//! Two-stage robust unit commitment: the adversarial subproblem, the master
//! problem, column-and-constraint generation, and the two-step
//! reconstruction procedure.

mod algorithm2;
mod ccg;
mod kkt;
mod master;
mod subproblem;

pub use algorithm2::{run_reconstruction, ReconstructionReport};
pub use ccg::{solve_two_stage_robust, solve_two_stage_robust_seeded, CcgOptions, CcgState, IterationLog, RobustSolution, StopReason};
pub use master::{master_problem, MasterSolution, Scenario, ScenarioKind};
pub use subproblem::{ellipsoid_cut, feasibility_subproblem, worst_case_subproblem, SubproblemOptions, SubproblemResult, SubproblemStatus};

//! Small embedded LP/MILP engine.
//!
//! A bounded-variable revised simplex with a dense basis inverse, row duals
//! and Bland's-rule anti-cycling; a best-bound branch and bound over binary
//! variables with a lazy-constraint callback; interval-arithmetic big-M
//! helpers; and an LP text writer/reader. Sized for problems of a few
//! thousand columns.

pub mod bigm;
pub mod branch;
mod error;
pub mod lp_format;
pub mod model;
pub mod simplex;

pub use bigm::{audit_big_m, big_m_for_row, BigMFlag, BigMRecord};
pub use branch::{solve_milp, solve_milp_with, LazyCallback, MilpOptions, NODE_LIMIT_ENV};
pub use error::MilpError;
pub use lp_format::{parse_lp_text, write_lp_text};
pub use model::{LinearProgram, Row, RowSense, Sense, SolveReport, Status, VarKind};
pub use simplex::{dual_bound, solve_lp, solve_lp_with, Basis, LpOptions};

/// Primal feasibility tolerance reported solutions are held to.
pub const FEAS_TOL: f64 = 1e-7;

//! Data-driven two-stage robust unit commitment.
//!
//! * [`system`]: grid data, the pre-dispatch MILP, the re-dispatch LP and its
//!   compact matrix form `A y ≥ B x + D u + E`.
//! * [`uncertainty`]: box, calibrated ellipsoid and cost-level uncertainty
//!   sets with order-statistic size selection.
//! * [`robust`]: column-and-constraint generation with KKT-based adversarial
//!   subproblems, and the two-pass construct/reconstruct solve.
//! * [`surrogate`]: forecast combination, PCA + ReLU MLP cost surrogate, its
//!   MILP encoding, and weight search (MILP and particle swarm).
//! * [`pipeline`]: synthetic cases, file formats, method variants,
//!   out-of-sample evaluation and parameter sweeps.

pub mod error;
pub mod linalg;
pub mod pipeline;
pub mod robust;
pub mod surrogate;
pub mod system;
pub mod uncertainty;

pub use error::{CoreError, Result};

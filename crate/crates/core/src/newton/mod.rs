//! Extended Newton iteration over the AC and converter unknowns with a Jacobian
//! pattern that stays fixed across limit transitions.

pub mod layout;
pub mod linsolve;
pub mod solve;
pub mod sparse;
pub mod state;

pub use layout::{VariableLayout, VscEq, VscVar};
pub use linsolve::{LinearSolveError, LinearSolver, SolverStats};
pub use solve::{inf_norm, newton_solve, PowerFlowProblem, SolverOptions};
pub use sparse::{EntrySink, PatternMismatch, SystemMatrix};
pub use state::{initialize_state, SolverState};

//! Newton power flow for AC networks with VSC multi-terminal HVDC overlays.
//!
//! Generator reactive limits and converter voltage and current limits are
//! enforced inside the iteration by rewriting control rows, so the Jacobian
//! keeps one sparsity pattern and one symbolic factorization per solve.
//!
//! ```no_run
//! use acdcflow::{case, newton_solve, SolverOptions};
//!
//! let text = std::fs::read_to_string("data/case14.m").unwrap();
//! let network = case::parse_matpower_case(&text).unwrap();
//! let overlay = case::MtdcSystem::default();
//! let solution = newton_solve(&network, &overlay, &SolverOptions::default()).unwrap();
//! println!("{:?} after {} iterations", solution.status, solution.iterations);
//! ```

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ac;
pub mod case;
mod error;
pub mod newton;
pub mod solution;
pub mod vsc;

pub use error::{CaseError, SolveError};
pub use newton::{newton_solve, PowerFlowProblem, SolverOptions};
pub use solution::{Solution, Status};

//! Solver-neutral mixed-integer model container plus the built-in solve layer.
//!
//! The [`Model`] type is a plain list of bounded variables and linear rows with a
//! minimisation objective. [`solve_lp`] solves its continuous relaxation and
//! [`solve_milp`] runs best-bound branch-and-bound over the binary variables.
//! Models can be exported in CPLEX LP text format with [`write_lp`] and solutions
//! computed elsewhere can be read back with [`import_values`].

mod bnb;
mod error;
mod import;
mod lp;
mod lpfile;
mod model;
mod result;

pub use bnb::solve_milp;
pub use error::SolverError;
pub use import::{import_values, parse_values};
pub use lp::{solve_lp, solve_lp_with_fixings};
pub use lpfile::{export_lp_file, fmt_g17, write_lp};
pub use model::{Model, ModelError, Row, RowId, Sense, Var, VarId, VarKind};
pub use result::{SolveLimits, SolveResult, Status};

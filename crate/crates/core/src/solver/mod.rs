//! Solvers for the saddle point system and the discrete inf-sup estimate.

mod cg;
mod infsup;
mod multigrid;
mod saddle;

pub use cg::{pcg, CgOutcome, Identity, Jacobi, Preconditioner};
pub use infsup::{estimate_infsup, infsup_on_mesh, smallest_generalized_eigen, InfSupEstimate};
pub use multigrid::Multigrid;
pub use saddle::{
    coupled_columns, dense_schur, solve, solve_bulk, BulkSolver, SolveReport, SolverOptions,
    SolverPath,
};

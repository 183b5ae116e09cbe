//! The one-dimensional Dirichlet problem, its solution basis and the
//! eigenvalue brackets.

pub mod basis;
pub mod brackets;
pub mod eigen;
pub mod fd;
pub mod prufer;

pub use eigen::{first_dirichlet_eigenvalue, second_dirichlet_eigenvalue, EigenOptions, EigenResult, EigenSummary, SlPotential};
pub use prufer::{Potential, PrState, ShootOptions};
pub use basis::{build_solution_basis, solve_with_flat_point, solve_with_flat_point_using, AnalyticSolution, BasisReport, Combination, FlatSolution, FlatSummary, LogCoefficient, Solution1D, SolutionBasis};
pub use fd::fd_first_eigenvalue;
pub use brackets::{check_variational_brackets, BracketReport, BracketRow};

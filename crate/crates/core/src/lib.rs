//! Haar wavelet collocation solver for the one-dimensional wave equation
//! with a Dirichlet condition at the left boundary and a nonlocal integral
//! condition in place of the right boundary value.
//!
//! The solved problem on (0,1) x [0,T] is
//!
//! ```text
//! u_tt - u_xx = phi(x,t)
//! u(x,0) = f(x),   u_t(x,0) = g(x)
//! u(0,t) = h(t),   integral_0^1 u(x,t) dx = nu(t)
//! ```
//!
//! The highest spatial derivative is expanded in a truncated Haar series,
//! integrated twice in closed form, and collocated at the midpoints of a
//! dyadic grid; time stepping is an implicit central-difference scheme.
//!
//! Modules:
//! - [`expr`]: arithmetic expression parser/evaluator for problem data
//! - [`haar`]: Haar basis, repeated integrals, collocation tables
//! - [`problem`]: problem definitions, JSON loading, compatibility checks
//! - [`numerics`]: dense matrices, LU solves, eigenvalues
//! - [`solver`]: scheme assembly, time stepping, reconstruction
//! - [`stability`]: amplification matrix and spectral radius reports
//! - [`analysis`]: error tables, convergence studies, coefficient decay
//! - [`cli`]: command-line front end used by the `haarwave` binary

pub mod analysis;
pub mod cli;
mod error;
pub mod expr;
pub mod haar;
pub mod numerics;
pub mod problem;
pub mod solver;
pub mod stability;

pub use error::Error;
pub use expr::Expression;
pub use haar::HaarBasis;
pub use numerics::DenseMatrix;
pub use problem::{CompatibilityReport, ProblemSpec};
pub use solver::{SchemeMatrices, SolutionRecord, SolverState};
pub use stability::SpectrumReport;

//! Means of symmetric positive definite matrices: two-variable geodesic,
//! spectral and Wasserstein means, multivariable Karcher-type means, solvers
//! for the Karcher-type equation with an operator-monotone generator, and a
//! property-testing harness.

pub mod counterex;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod means2;
pub mod meansm;
pub mod pdcore;
pub mod repfn;
pub mod speqsolve;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use meansm::{MeanProblem, SolveOutcome, SolverOptions};
pub use pdcore::{SpdMatrix, SymMatrix, WeightVector};
pub use repfn::RepFunction;

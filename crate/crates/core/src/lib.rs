//! Obstacle problem for the evolutionary p-Laplace equation.
//!
//! The crate computes the smallest solution `u >= psi` of `u_t >= div(|grad u|^{p-2} grad u)`
//! on a box-shaped space-time cylinder, with data taken from the obstacle on the
//! parabolic boundary, and checks the solution against the structural
//! properties that such solutions are known to satisfy:
//!
//! - the time derivative is the function `Δ_p u + (ψ_t − Δ_p ψ) χ_Ξ`, with `Ξ`
//!   the coincidence set,
//! - solutions of the ε-regularized problem converge to `u` as ε ↓ 0,
//! - `F = |∇u|^{(p−2)/2} ∇u` has square-integrable difference quotients,
//! - `Δ_p u` integrates by parts against test functions,
//! - the variational inequality and the weak supersolution inequality hold.
//!
//! Module map:
//!
//! - [`geometry`]: grids, parabolic boundary classification, cutoff functions.
//! - [`fields`]: nodal fields, discrete calculus, space-time norms, CSV export.
//! - [`obstacle`]: obstacle models with analytic derivatives; [`catalog`] holds the built-in ones.
//! - [`pflux`]: flux kernels, the discrete p-Laplacian and the vector inequalities.
//! - [`ineq`]: Monte Carlo suites for the vector inequalities.
//! - [`solver`]: implicit Euler with projected nonlinear Gauss–Seidel per step.
//! - [`verification`]: the a-posteriori checks and report assembly.
//! - [`cli`]: scenario files and the `solve | verify | convergence | ineq` commands.

// `!(x > 0.0)` is used on purpose so that NaN is rejected; index loops
// mirror the stencil formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod catalog;
pub mod cli;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod ineq;
pub mod obstacle;
pub mod pflux;
pub mod solver;
pub mod verification;

pub use error::{Error, Result};
pub use fields::{ScalarField, VectorField, Weight};
pub use geometry::{Cutoff, Grid, NodeKind};
pub use obstacle::{Obstacle, ObstacleModel};
pub use pflux::PParams;
pub use solver::{SolveResult, SolverConfig};

//! Exact arithmetic: rationals, dense linear algebra and linear programming.

pub mod linalg;
pub mod rational;
pub mod simplex;

pub use linalg::{solve_linear, LinearSolution, Matrix, Vector};
pub use rational::{q, Rational};
pub use simplex::{lp_solve, LinearProgram, LpResult, LpStatus, Relation};

//! Regularized limited-memory subspace minimization conjugate gradient
//! method for smooth unconstrained optimization.

pub mod acceleration;
pub mod baselines;
pub mod bench;
pub mod error;
pub mod linalg;
pub mod linesearch;
pub mod params;
pub mod problem;
pub mod smcg;
pub mod state;
pub mod subspace;
pub mod solver;
pub mod problems;

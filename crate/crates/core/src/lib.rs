//! Frank-Wolfe for concave maximization over compact convex sets, with
//! lower/upper bound bookkeeping, several step-size rules, inexact oracles
//! and auditing of the resulting convergence guarantees.

pub mod error;
pub mod guarantees;
pub mod oracles;
pub mod problems;
pub mod rng;
pub mod solver;
pub mod steprules;

pub use error::{Error, Result};

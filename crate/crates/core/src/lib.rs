//! Deterministic data-parallel branch-and-bound for mixed-integer programs.
//!
//! The solver reads MPS models ([`model`]), solves node relaxations with a
//! dense bounded-variable simplex ([`lp`]), tightens bounds by activity
//! propagation ([`domain`]) and learned no-good conflicts ([`conflict`]),
//! separates Gomory and cover cuts ([`separation`]) and runs primal
//! heuristics ([`heuristics`]). [`bnb`] holds the tree search and
//! [`parallel`] the round-based deterministic engine; [`balance`] predicts
//! dive workloads to rebalance node assignment.

pub mod balance;
pub mod bnb;
pub mod conflict;
pub mod domain;
pub mod encode;
pub mod heuristics;
pub mod instances;
pub mod lp;
pub mod model;
pub mod par;
pub mod parallel;
pub mod pool;
pub mod separation;

pub use bnb::{solve_sequential, SolveResult, SolveStatus, SolverConfig};
pub use model::{MipModel, Solution, Tolerances};
pub use parallel::solve_parallel;

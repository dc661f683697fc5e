//! Quasigroup-completion search profiles and exact algorithm-portfolio
//! runtime distributions.
//!
//! The pipeline: [`latin`] generates partial Latin squares, [`solver`] runs
//! complete backtracking search under four variable/value strategies,
//! [`profiles`] turns batches of seeded runs into empirical backtrack-count
//! distributions, and [`portfolio`] computes the exact law of the minimum
//! across independently running processors along with its mean/std frontier.

pub mod cli;
pub mod error;
pub mod exec;
pub mod latin;
pub mod portfolio;
pub mod profiles;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
pub use latin::{generate, GeneratorSpec, PartialLatinSquare};
pub use solver::{solve, HeuristicConfig, Outcome, SolveResult, Strategy};
pub use profiles::{collect, to_distribution, EmpiricalDistribution, RunSet};

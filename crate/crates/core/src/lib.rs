//! Exact branch-and-cut for the vehicle routing problem with stochastic demands
//! given as an empirical scenario distribution, using integer L-shaped cuts.

pub mod cuts;
pub mod error;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod rational;
pub mod recourse;
pub mod separation;
pub mod solver;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};

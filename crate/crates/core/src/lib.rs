//! Exact-likelihood separable temporal ERGMs (STERGMs) for panels of small
//! undirected networks.
//!
//! Every normalizing constant is computed by full enumeration of the
//! formation and persistence sample spaces, so the likelihood, its gradient
//! and the Fisher information are exact up to floating-point rounding.

pub mod graph;
pub mod inference;
pub mod io;
pub mod likelihood;
pub mod simulate;
pub mod stats;

#[cfg(test)]
mod testutil;

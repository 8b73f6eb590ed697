//! Chance-constrained unit commitment with co-optimized energy, reserve and
//! inertia, and extraction of the three market prices from the duals of the
//! fixed-commitment program.

pub mod case;
pub mod cli;
pub mod clearing;
pub mod equilibrium;
pub mod error;
pub mod inertia;
pub mod miqp;
pub mod output;
pub mod parallel;
pub mod pricing;
pub mod program;
pub mod qp;
pub mod quantile;
pub mod reformulation;
pub mod schedule;
pub mod stochastic;

pub use error::{Error, Result};

//! Half-flat ASEP: Monte Carlo simulation, exact moment and tau-Laplace
//! formulas, and the Airy2->1 one-point distribution they converge to.

pub mod airy;
pub mod asep_sim;
pub mod cli;
pub mod contour;
pub mod error;
pub mod exact_series;
pub mod fredholm;
pub mod harness;
pub mod par;
pub mod qmath;
pub mod rng;

pub use error::{Error, Result};

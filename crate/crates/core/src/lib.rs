//! Stochastic spreading processes on contact networks.
//!
//! Two tau-leaping engines share a CSR graph: [`markov`] for memoryless
//! rates and [`renewal`] for age-dependent hazards. [`exact`] holds
//! event-driven reference simulators and [`analysis`] the validation harness.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod exact;
pub mod graph;
pub mod hazards;
pub mod markov;
pub mod models;
pub mod renewal;
pub mod rng;

pub use error::{Error, Result};

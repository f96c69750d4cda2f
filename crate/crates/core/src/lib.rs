//! Discounted online allocation: NormalHedge, discounted Hedge, the
//! confidence-rated extension, simulation environments, and an HMM
//! latent-state prediction experiment.

pub mod cli;
pub mod engine;
pub mod environments;
pub mod error;
pub mod hedgers;
pub mod hmm;
pub mod potential;
pub mod rng;

pub use error::{Error, Result};

//! Fairness-sensitive service-agent simulation and policy-gradient training.
//!
//! A simulated agent serves requesters one episode at a time. Four bias
//! issue rates (willingness, quality, priority, risk) are measured per
//! sensitive group, a pre-trained detector flags biased training epochs, and
//! the penalty-shaped REINFORCE/PPO learner suppresses discriminatory
//! behavior.

pub mod config;
pub mod detector;
pub mod env;
pub mod error;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod nn;
pub mod population;
pub mod shaping;
pub mod test_support;

pub use error::FairserveError;

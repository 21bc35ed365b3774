//! Thompson sampling for episodic restless bandits with binary rewards.
//!
//! Each arm is a two-state Markov chain that keeps evolving whether or not it
//! is pulled; the learner sees only the states of the arms it pulls. The
//! crate provides the environment simulator, four policy mappings (best
//! fixed arms, myopic, Whittle index, exact dynamic programming), exact and
//! Monte Carlo policy evaluation, Thompson sampling over discrete priors with
//! its diagnostics, and the regret experiment harness.
//!
//! All numeric code is generic over [`Real`]; the `*64` and `*32` aliases
//! below fix the scalar.

pub mod chain;
pub mod error;
pub mod harness;
pub mod learner;
pub mod model;
pub mod policies;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod valuation;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use error::{Error, Result};
pub use policies::{Policy, PolicyMapping};
pub use scalar::Real;

pub type Chain64 = chain::Chain<f64>;
pub type ArmModel64 = model::ArmModel<f64>;
pub type SystemParameter64 = model::SystemParameter<f64>;
pub type Environment64 = model::Environment<f64>;
pub type Prior64 = learner::Prior<f64>;
pub type RunRecord64 = learner::RunRecord<f64>;

pub type Chain32 = chain::Chain<f32>;
pub type ArmModel32 = model::ArmModel<f32>;
pub type SystemParameter32 = model::SystemParameter<f32>;
pub type Environment32 = model::Environment<f32>;
pub type Prior32 = learner::Prior<f32>;

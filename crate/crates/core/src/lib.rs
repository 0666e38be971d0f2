//! Simulator and policy laboratory for the adversarial alert-inspection game.
//!
//! An hourly-stepped alert queue (Poisson arrivals, deterministic batch
//! service) on top of which a defender allocates chunked extra inspections
//! and an attacker injects chunked extra alerts. The crate provides the
//! queue model, the two-player environment, rule-based and learned policies,
//! a double-oracle retraining loop, closed-form bound checks and the
//! reporting metrics used by the experiment recipes.

pub mod bounds;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod game;
pub mod metrics;
pub mod oracle;
pub mod policy;
pub mod queue;
pub mod rl;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use game::{
    AttackerObservation, CostFunction, DefenderObservation, Game, GameConfig, GameState,
    HourRecord, RunTrace,
};
pub use queue::{DisturbanceModel, HourOutcome, QueueParams};

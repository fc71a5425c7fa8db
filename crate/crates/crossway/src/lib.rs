//! Deterministic multi-vehicle decision simulator for unsignalized
//! intersections. Each vehicle decides "accelerate or decelerate" every
//! subgame through a 2x2 game whose payoffs combine a gain/loss-valued
//! safety margin, a saturating speed value, and an acceleration-tendency
//! discount; multi-vehicle conflicts decompose into two-vehicle subgames
//! whose solutions are intersected conservatively.
//!
//! The crate is organized bottom-up:
//! - [`kinematics`]: closed-form arrival/passing predictions and residual
//!   intervals.
//! - [`payoff`]: driver profiles and the subjective payoff pipeline.
//! - [`game`]: pure-strategy Nash solving and the resolution cases.
//! - [`coordinator`]: intersection geometry, decomposition, aggregation.
//! - [`plant`]: actuator lag, integration, emergency braking.
//! - [`subgame`]: payoff-matrix construction and target-acceleration choice.
//! - [`sim`]: the closed-loop scenario driver.
//! - [`experiments`]: scenario generators and batch statistics.
//! - [`batch`]: sequential/parallel batch execution (feature `parallel`).

pub mod batch;
pub mod config;
pub mod coordinator;
pub mod experiments;
pub mod game;
pub mod kinematics;
pub mod output;
pub mod payoff;
pub mod plant;
pub mod sim;
pub mod subgame;

pub use batch::{run_batch, run_batch_sequential};
pub use sim::{run_scenario, RunResult, ScenarioSpec};

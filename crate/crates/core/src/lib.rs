//! Multi-fidelity adaptive stress testing.
//!
//! Finds likely failures of an autonomous-driving policy by searching for
//! adversarial disturbance sequences with a recurrent PPO solver, then adapts
//! failures found in a cheap low-fidelity simulator to an expensive
//! high-fidelity one with the backward algorithm.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ast;
pub mod backward;
pub mod crosswalk;
pub mod error;
pub mod harness;
pub mod policy;
pub mod ppo;

pub use ast::{
    step_reward, trajectory_return, EnvironmentAction, RewardConfig, Simulator, Snapshot,
    StepOutcome, Trajectory, TrajectoryStep,
};
pub use crosswalk::{CrosswalkSim, FidelityConfig, ScenarioConfig, SensorModel};
pub use error::{Error, Result};
pub use policy::{Checkpoint, PolicyParams, PolicyShape};
pub use ppo::PpoConfig;

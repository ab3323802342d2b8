//! Scenario-agnostic adaptive stress testing machinery.
//!
//! A solver proposes [`EnvironmentAction`]s, the [`Simulator`] reports a
//! [`StepOutcome`] (failure-event flag and the action's log-likelihood), and
//! [`step_reward`] turns that into the per-step reward the solver maximizes.
//! Summing log-likelihoods over a trajectory is the log of the product of the
//! per-step likelihoods, so the best-return failing trajectory is the most
//! likely failure.

mod reward;
mod seeding;
mod simulator;
mod trajectory;

pub use reward::{gaussian_log_density, step_reward, RewardConfig, StepOutcome};
pub use seeding::{derive_seed, rollout_rng};
pub use simulator::{EnvironmentAction, Simulator, Snapshot};
pub use trajectory::{trajectory_return, Trajectory, TrajectoryStep};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// What the simulator reports for one transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// The new state is in the failure set.
    pub event: bool,
    /// `log P(a_t | s_t)` of the action that produced this transition.
    pub log_likelihood: f64,
    pub terminal: bool,
    /// Closest vehicle/pedestrian clearance seen so far in the episode, meters.
    pub miss_distance: f64,
}

impl StepOutcome {
    pub fn validate(&self) -> Result<()> {
        if !self.log_likelihood.is_finite() {
            return Err(Error::InvalidOutcome(format!(
                "log_likelihood is {}",
                self.log_likelihood
            )));
        }
        if !(self.miss_distance >= 0.0) {
            return Err(Error::InvalidOutcome(format!(
                "miss_distance is {}",
                self.miss_distance
            )));
        }
        Ok(())
    }
}

/// Finite stand-in for the infinite penalty on episodes that end without a
/// failure: `-(alpha_miss + beta_miss * miss_distance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub alpha_miss: f64,
    pub beta_miss: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            alpha_miss: 1e4,
            beta_miss: 1e3,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_miss >= 0.0 && self.beta_miss >= 0.0) {
            return Err(Error::InvalidConfig(
                "miss penalties must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Reward for reaching state `s_t` (`t` counts completed steps, so the last
/// transition of a full-length episode has `t == horizon`).
///
/// * `0` when the state is a failure event,
/// * the miss penalty when the horizon is reached without an event,
/// * the action log-likelihood otherwise.
pub fn step_reward(
    outcome: &StepOutcome,
    t: usize,
    horizon: usize,
    cfg: &RewardConfig,
) -> Result<f64> {
    outcome.validate()?;
    if outcome.event {
        Ok(0.0)
    } else if t >= horizon {
        Ok(-(cfg.alpha_miss + cfg.beta_miss * outcome.miss_distance))
    } else {
        Ok(outcome.log_likelihood)
    }
}

/// Log-density of `x` under a diagonal Gaussian.
pub fn gaussian_log_density(x: &[f64], mean: &[f64], std: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), mean.len());
    debug_assert_eq!(x.len(), std.len());
    x.iter()
        .zip(mean)
        .zip(std)
        .map(|((&x, &m), &s)| {
            let z = (x - m) / s;
            -s.ln() - 0.5 * LN_2PI - 0.5 * z * z
        })
        .sum()
}

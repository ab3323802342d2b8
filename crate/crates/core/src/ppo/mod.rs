//! Proximal policy optimization with generalized advantage estimation over
//! batches of recurrent-policy rollouts.

mod adam;
mod gae;
mod loss;
mod rollout;
mod solver;

use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use gae::{compute_gae, normalize};
pub use loss::{evaluate_loss, kl_diag_gaussian, EpisodeData, LossValue, LossWeights};
pub use rollout::{rollout, StartDistribution};
pub use solver::{
    run_until_failure, DrlOutcome, DrlSolver, EpochMetrics, EpochReport, EpochStop, UpdateStats,
};

use crate::ast::RewardConfig;
use crate::error::{Error, Result};
use crate::policy::PolicyParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    /// Environment steps collected per epoch.
    pub batch_size: usize,
    pub discount: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    /// Mean KL(old || new) above which an update is cut short.
    pub kl_limit: f64,
    pub learning_rate: f64,
    /// Passes over the batch per update.
    pub update_epochs: usize,
    /// Episode-interleaved minibatches per pass.
    pub minibatches: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Multiplier applied to rewards before advantage and value estimation.
    pub reward_scale: f64,
    pub hidden: usize,
    pub reward: RewardConfig,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            batch_size: 5000,
            discount: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            kl_limit: 1.0,
            learning_rate: 1e-3,
            update_epochs: 10,
            minibatches: 8,
            value_coef: 0.5,
            entropy_coef: 0.0,
            reward_scale: 1e-4,
            hidden: 64,
            reward: RewardConfig::default(),
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::InvalidConfig("discount must be in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::InvalidConfig("gae_lambda must be in [0, 1]".into()));
        }
        if !(self.clip_epsilon > 0.0) {
            return Err(Error::InvalidConfig("clip_epsilon must be positive".into()));
        }
        if self.batch_size == 0 || self.update_epochs == 0 || self.hidden == 0 {
            return Err(Error::InvalidConfig(
                "batch_size, update_epochs and hidden must be positive".into(),
            ));
        }
        self.reward.validate()
    }
}

/// Total weighted PPO loss of a batch under `params`.
pub fn ppo_loss(episodes: &[EpisodeData], params: &PolicyParams, cfg: &PpoConfig) -> Result<f64> {
    let refs: Vec<&EpisodeData> = episodes.iter().collect();
    let weights = LossWeights {
        policy: 1.0,
        value: cfg.value_coef,
        entropy: cfg.entropy_coef,
    };
    Ok(evaluate_loss(params, &refs, cfg.clip_epsilon, weights, None)?.total)
}

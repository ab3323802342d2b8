use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::gae::{compute_gae, normalize};
use super::loss::{evaluate_loss, EpisodeData, LossValue, LossWeights};
use super::rollout::{rollout, StartDistribution};
use super::PpoConfig;
use crate::ast::{rollout_rng, Simulator, Trajectory};
use crate::error::{Error, Result};
use crate::policy::PolicyParams;

/// When an epoch stops collecting rollouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochStop {
    /// Collect at least `batch_size` steps.
    FullBatch,
    /// Also stop right after the first rollout that ends in failure.
    FirstFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub env_steps: u64,
    pub episodes: usize,
    pub failure_found: bool,
    /// Steps of this epoch up to and including the first failing rollout.
    pub steps_to_first_failure: Option<u64>,
    /// Highest-return failing rollout of the epoch.
    pub best_failure: Option<Trajectory>,
    pub best_return: f64,
    pub mean_return: f64,
    pub mean_kl: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub kl_stopped: bool,
    pub updates: usize,
}

/// One line of `metrics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub env_steps_cum: u64,
    pub mean_return: f64,
    pub best_return: f64,
    pub failure_found: bool,
    pub mean_kl: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
}

impl EpochReport {
    pub fn metrics(&self, env_steps_cum: u64) -> EpochMetrics {
        EpochMetrics {
            epoch: self.epoch,
            env_steps_cum,
            mean_return: self.mean_return,
            best_return: self.best_return,
            failure_found: self.failure_found,
            mean_kl: self.mean_kl,
            policy_loss: self.policy_loss,
            value_loss: self.value_loss,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub initial: LossValue,
    pub mean_kl: f64,
    pub kl_stopped: bool,
    pub updates: usize,
}

/// PPO solver state: policy parameters, optimizer moments and the global
/// rollout counter that keys each rollout's random stream.
#[derive(Debug, Clone)]
pub struct DrlSolver {
    pub params: PolicyParams,
    pub cfg: PpoConfig,
    adam: Adam,
    seed: u64,
    rollouts: u64,
    epoch: usize,
}

impl DrlSolver {
    pub fn new(params: PolicyParams, cfg: PpoConfig, seed: u64) -> Self {
        let adam = Adam::new(params.len(), cfg.learning_rate);
        Self {
            params,
            cfg,
            adam,
            seed,
            rollouts: 0,
            epoch: 0,
        }
    }

    pub fn epochs_run(&self) -> usize {
        self.epoch
    }

    /// Collects one batch of rollouts from `start`, then runs the clipped PPO
    /// update with the KL guard.
    pub fn train_epoch<S: Simulator + ?Sized>(
        &mut self,
        sim: &mut S,
        start: &StartDistribution,
        stop: EpochStop,
    ) -> Result<EpochReport> {
        let epoch = self.epoch;
        self.epoch += 1;
        self.train_epoch_inner(sim, start, stop, epoch)
            .map_err(|e| Error::Epoch {
                epoch,
                source: Box::new(e),
            })
    }

    fn train_epoch_inner<S: Simulator + ?Sized>(
        &mut self,
        sim: &mut S,
        start: &StartDistribution,
        stop: EpochStop,
        epoch: usize,
    ) -> Result<EpochReport> {
        let steps_before = sim.steps_taken();
        let mut episodes: Vec<EpisodeData> = Vec::new();
        let mut collected = 0u64;
        let mut first_failure = None;
        let mut best_failure: Option<Trajectory> = None;
        let mut best_return = f64::NEG_INFINITY;
        let mut return_sum = 0.0;
        let target = self.cfg.batch_size.max(1) as u64;
        while collected < target {
            let index = episodes.len();
            let mut rng = rollout_rng(self.seed, self.rollouts);
            start.start(sim, index, self.rollouts)?;
            self.rollouts += 1;
            let (data, traj) = rollout(
                sim,
                &self.params,
                &mut rng,
                &self.cfg.reward,
                self.cfg.reward_scale,
            )?;
            collected += data.len() as u64;
            return_sum += traj.total_return;
            best_return = best_return.max(traj.total_return);
            episodes.push(data);
            if traj.ends_in_failure {
                first_failure.get_or_insert(collected);
                if best_failure
                    .as_ref()
                    .is_none_or(|b| traj.total_return > b.total_return)
                {
                    best_failure = Some(traj);
                }
                if stop == EpochStop::FirstFailure {
                    break;
                }
            }
        }
        let env_steps = sim.steps_taken() - steps_before;
        debug_assert_eq!(env_steps, collected);
        let n_episodes = episodes.len();
        let stats = self.update(&mut episodes)?;
        Ok(EpochReport {
            epoch,
            env_steps,
            episodes: n_episodes,
            failure_found: first_failure.is_some(),
            steps_to_first_failure: first_failure,
            best_failure,
            best_return,
            mean_return: return_sum / n_episodes as f64,
            mean_kl: stats.mean_kl,
            policy_loss: stats.initial.policy,
            value_loss: stats.initial.value,
            kl_stopped: stats.kl_stopped,
            updates: stats.updates,
        })
    }

    /// GAE, batch advantage normalization, then up to `update_epochs` passes
    /// of minibatch steps. Before each step the KL from the rollout policy
    /// is measured on the minibatch; once it exceeds `kl_limit` the update
    /// ends without applying that minibatch.
    pub fn update(&mut self, episodes: &mut [EpisodeData]) -> Result<UpdateStats> {
        let cfg = self.cfg.clone();
        for ep in episodes.iter_mut() {
            let (adv, ret) = compute_gae(
                &ep.rewards,
                &ep.value_old,
                0.0,
                cfg.discount,
                cfg.gae_lambda,
            );
            ep.advantages = adv;
            ep.returns = ret;
        }
        let mut all: Vec<f64> = episodes
            .iter()
            .flat_map(|e| e.advantages.iter().copied())
            .collect();
        normalize(&mut all);
        let mut offset = 0;
        for ep in episodes.iter_mut() {
            let n = ep.len();
            ep.advantages.copy_from_slice(&all[offset..offset + n]);
            offset += n;
        }

        let weights = LossWeights {
            policy: 1.0,
            value: cfg.value_coef,
            entropy: cfg.entropy_coef,
        };
        let n_mb = cfg.minibatches.clamp(1, episodes.len().max(1));
        let chunks: Vec<Vec<&EpisodeData>> = (0..n_mb)
            .map(|m| episodes.iter().skip(m).step_by(n_mb).collect())
            .collect();
        let all_refs: Vec<&EpisodeData> = episodes.iter().collect();

        let mut stats = UpdateStats::default();
        let mut grad = vec![0.0; self.params.len()];
        'epochs: for _ in 0..cfg.update_epochs {
            for chunk in &chunks {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let lv = evaluate_loss(
                    &self.params,
                    chunk,
                    cfg.clip_epsilon,
                    weights,
                    Some(&mut grad),
                )?;
                if stats.updates == 0 {
                    stats.initial = lv;
                } else if lv.mean_kl > cfg.kl_limit {
                    stats.kl_stopped = true;
                    break 'epochs;
                }
                self.adam.step(self.params.as_flat_mut(), &grad);
                stats.updates += 1;
            }
        }
        stats.mean_kl =
            evaluate_loss(&self.params, &all_refs, cfg.clip_epsilon, weights, None)?.mean_kl;
        if self.params.as_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("policy parameters diverged".into()));
        }
        Ok(stats)
    }
}

/// Result of running the solver until the first failure or the step budget.
#[derive(Debug, Clone, PartialEq)]
pub struct DrlOutcome {
    /// Cumulative steps through the end of the first failing rollout.
    pub steps_to_failure: Option<u64>,
    pub steps_used: u64,
    pub epochs: usize,
    /// Best failure of the epoch in which the first failure appeared.
    pub failure: Option<Trajectory>,
    pub metrics: Vec<EpochMetrics>,
}

/// Trains from `start` epoch by epoch until an epoch contains a failure or
/// `max_steps` simulator steps have been spent.
pub fn run_until_failure<S: Simulator + ?Sized>(
    solver: &mut DrlSolver,
    sim: &mut S,
    start: &StartDistribution,
    max_steps: u64,
) -> Result<DrlOutcome> {
    let base = sim.steps_taken();
    let mut metrics = Vec::new();
    let mut epochs = 0;
    loop {
        let used = sim.steps_taken() - base;
        if used >= max_steps {
            return Ok(DrlOutcome {
                steps_to_failure: None,
                steps_used: used,
                epochs,
                failure: None,
                metrics,
            });
        }
        let report = solver.train_epoch(sim, start, EpochStop::FullBatch)?;
        epochs += 1;
        metrics.push(report.metrics(sim.steps_taken() - base));
        if let Some(k) = report.steps_to_first_failure {
            return Ok(DrlOutcome {
                steps_to_failure: Some(used + k),
                steps_used: sim.steps_taken() - base,
                epochs,
                failure: report.best_failure,
                metrics,
            });
        }
    }
}

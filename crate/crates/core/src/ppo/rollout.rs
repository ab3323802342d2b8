use rand::Rng;

use super::loss::EpisodeData;
use crate::ast::{step_reward, RewardConfig, Simulator, Snapshot, Trajectory, TrajectoryStep};
use crate::error::{Error, Result};
use crate::policy::{sample_action, PolicyParams};

/// Where episodes of an epoch begin.
#[derive(Debug, Clone, PartialEq)]
pub enum StartDistribution {
    /// The scenario's initial state.
    Reset,
    /// Restore from these states, cycling through them by episode index.
    Snapshots(Vec<Snapshot>),
}

impl StartDistribution {
    pub fn start<S: Simulator + ?Sized>(
        &self,
        sim: &mut S,
        episode: usize,
        seed: u64,
    ) -> Result<()> {
        match self {
            StartDistribution::Reset => {
                sim.reset(seed);
                Ok(())
            }
            StartDistribution::Snapshots(snaps) => {
                if snaps.is_empty() {
                    return Err(Error::InvalidConfig("empty start distribution".into()));
                }
                sim.restore(&snaps[episode % snaps.len()])
            }
        }
    }
}

/// Runs the stochastic policy from the simulator's current state until the
/// episode terminates. Rewards in the returned [`EpisodeData`] are multiplied
/// by `reward_scale`; the trajectory keeps the unscaled rewards.
pub fn rollout<S: Simulator + ?Sized, R: Rng + ?Sized>(
    sim: &mut S,
    params: &PolicyParams,
    rng: &mut R,
    reward_cfg: &RewardConfig,
    reward_scale: f64,
) -> Result<(EpisodeData, Trajectory)> {
    if sim.is_terminal() {
        return Err(Error::Terminal);
    }
    let horizon = sim.horizon();
    let mut traj = Trajectory::starting_at(sim.t());
    let mut data = EpisodeData::default();
    let mut h = params.initial_hidden();
    while !sim.is_terminal() {
        let obs = sim.observe();
        let (out, h_next) = params.step(&h, &obs)?;
        h = h_next;
        let (action, lp) = sample_action(&out, rng);
        let state_snapshot = sim.snapshot();
        let outcome = sim.step(&action)?;
        let reward = step_reward(&outcome, sim.t(), horizon, reward_cfg)?;

        data.obs.extend_from_slice(&obs);
        data.actions.extend_from_slice(action.values());
        data.log_prob_old.push(lp);
        data.value_old.push(out.value);
        data.mean_old.extend_from_slice(&out.mean);
        data.log_std_old.extend_from_slice(&out.log_std);
        data.rewards.push(reward * reward_scale);
        traj.push(TrajectoryStep {
            state_snapshot,
            action,
            reward,
            outcome,
        });
    }
    Ok((data, traj))
}

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::ast::{EnvironmentAction, Simulator, Snapshot, StepOutcome, Trajectory};
use crate::error::{Error, Result};

/// One demonstration step: the hifi state and the action taken from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoStep {
    pub t: usize,
    pub snapshot: Snapshot,
    pub action: EnvironmentAction,
}

/// Where a demonstration came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DemoSource {
    /// Low-fidelity configuration the failure was found in.
    pub lofi_config: serde_json::Value,
    pub adaptation: String,
    pub lofi_steps: u64,
    /// Hifi steps spent replaying the adapted actions.
    pub replay_steps: u64,
}

/// A lofi failure replayed in hifi: the restart spine of the backward
/// algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertDemonstration {
    pub steps: Vec<DemoStep>,
    /// Whether the replay collided in hifi.
    pub ends_in_failure: bool,
    /// Return of the replay under the hifi reward.
    pub hifi_return: f64,
    pub source: DemoSource,
}

impl ExpertDemonstration {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Replays `actions` in `sim` from reset, recording the state before
    /// each action. Stops early if the episode terminates.
    pub fn record<S, I>(sim: &mut S, actions: I, source: DemoSource) -> Result<(Self, Trajectory)>
    where
        S: Simulator + ?Sized,
        I: IntoIterator<Item = EnvironmentAction>,
    {
        use crate::ast::{step_reward, RewardConfig, TrajectoryStep};
        sim.reset(0);
        let before = sim.steps_taken();
        let horizon = sim.horizon();
        let mut steps = Vec::new();
        let mut traj = Trajectory::default();
        for action in actions {
            if sim.is_terminal() {
                break;
            }
            let t = sim.t();
            let snapshot = sim.snapshot();
            let outcome: StepOutcome = sim.step(&action)?;
            let reward = step_reward(&outcome, sim.t(), horizon, &RewardConfig::default())?;
            traj.push(TrajectoryStep {
                state_snapshot: snapshot.clone(),
                action: action.clone(),
                reward,
                outcome,
            });
            steps.push(DemoStep {
                t,
                snapshot,
                action,
            });
        }
        if steps.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        let mut source = source;
        source.replay_steps = sim.steps_taken() - before;
        let demo = ExpertDemonstration {
            steps,
            ends_in_failure: traj.ends_in_failure,
            hifi_return: traj.total_return,
            source,
        };
        Ok((demo, traj))
    }

    /// Checks every snapshot against `sim`'s configuration and that each
    /// step's action reproduces the next snapshot exactly.
    pub fn verify<S: Simulator + ?Sized>(&self, sim: &mut S) -> Result<()> {
        for (i, step) in self.steps.iter().enumerate() {
            sim.restore(&step.snapshot)?;
            if let Some(next) = self.steps.get(i + 1) {
                sim.step(&step.action)?;
                if sim.snapshot() != next.snapshot {
                    return Err(Error::Adaptation(format!(
                        "demonstration step {i} does not reproduce step {}",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// JSON-lines export: one `{t, snapshot, action}` object per step.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for step in &self.steps {
            serde_json::to_writer(&mut out, step)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads steps written by [`write_jsonl`](Self::write_jsonl) and
    /// recomputes the failure flag by replaying them in `sim`.
    pub fn read_jsonl<R: BufRead, S: Simulator + ?Sized>(input: R, sim: &mut S) -> Result<Self> {
        let mut steps = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            steps.push(serde_json::from_str::<DemoStep>(&line)?);
        }
        let last = steps.last().ok_or(Error::EmptyTrajectory)?.clone();
        let mut demo = ExpertDemonstration {
            steps,
            ends_in_failure: false,
            hifi_return: 0.0,
            source: DemoSource::default(),
        };
        demo.verify(sim)?;
        sim.restore(&last.snapshot)?;
        demo.ends_in_failure = sim.step(&last.action)?.event;
        Ok(demo)
    }
}

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{EnvironmentAction, Snapshot, StepOutcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    /// State the action was taken from.
    pub state_snapshot: Snapshot,
    pub action: EnvironmentAction,
    pub reward: f64,
    pub outcome: StepOutcome,
}

/// An ordered run of steps. `start_t` is the episode step index of the first
/// entry (nonzero for rollouts restarted mid-episode).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start_t: usize,
    pub steps: Vec<TrajectoryStep>,
    pub total_return: f64,
    pub ends_in_failure: bool,
}

#[derive(Serialize, Deserialize)]
struct StepLine {
    t: usize,
    state: Snapshot,
    action: EnvironmentAction,
    reward: f64,
    event: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    log_likelihood: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    miss_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    terminal: Option<bool>,
}

impl Trajectory {
    pub fn starting_at(start_t: usize) -> Self {
        Self {
            start_t,
            ..Self::default()
        }
    }

    pub fn push(&mut self, step: TrajectoryStep) {
        self.total_return += step.reward;
        self.ends_in_failure = step.outcome.event;
        self.steps.push(step);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn actions(&self) -> impl Iterator<Item = &EnvironmentAction> {
        self.steps.iter().map(|s| &s.action)
    }

    /// Appends `tail`, whose first step must follow this trajectory's last.
    pub fn concat(mut self, tail: Trajectory) -> Self {
        for step in tail.steps {
            self.push(step);
        }
        self
    }

    /// JSON-lines export: one `{t, state, action, reward, event}` object per step.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, step) in self.steps.iter().enumerate() {
            let line = StepLine {
                t: self.start_t + i,
                state: step.state_snapshot.clone(),
                action: step.action.clone(),
                reward: step.reward,
                event: step.outcome.event,
                log_likelihood: Some(step.outcome.log_likelihood),
                miss_distance: Some(step.outcome.miss_distance),
                terminal: Some(step.outcome.terminal),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut traj = Trajectory::default();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: StepLine = serde_json::from_str(&line)?;
            if i == 0 {
                traj.start_t = parsed.t;
            }
            traj.push(TrajectoryStep {
                state_snapshot: parsed.state,
                action: parsed.action,
                reward: parsed.reward,
                outcome: StepOutcome {
                    event: parsed.event,
                    log_likelihood: parsed.log_likelihood.unwrap_or(parsed.reward),
                    terminal: parsed.terminal.unwrap_or(parsed.event),
                    miss_distance: parsed.miss_distance.unwrap_or(0.0),
                },
            });
        }
        Ok(traj)
    }
}

/// Sum of per-step rewards.
pub fn trajectory_return(traj: &Trajectory) -> Result<f64> {
    if traj.steps.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    Ok(traj.steps.iter().map(|s| s.reward).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(reward: f64, event: bool) -> TrajectoryStep {
        TrajectoryStep {
            state_snapshot: Snapshot(vec![1, 2, 3]),
            action: EnvironmentAction::new(vec![0.5, -0.25]),
            reward,
            outcome: StepOutcome {
                event,
                log_likelihood: reward,
                terminal: event,
                miss_distance: 0.0,
            },
        }
    }

    #[test]
    fn returns_sum_rewards() {
        let mut t = Trajectory::default();
        for r in [-1.0, -2.0] {
            t.push(step(r, false));
        }
        t.push(step(0.0, true));
        assert_eq!(trajectory_return(&t).unwrap(), -3.0);
        assert_eq!(t.total_return, -3.0);
        assert!(t.ends_in_failure);
    }

    #[test]
    fn immediate_failure_returns_zero() {
        let mut t = Trajectory::default();
        t.push(step(0.0, true));
        assert_eq!(trajectory_return(&t).unwrap(), 0.0);
    }

    #[test]
    fn three_standard_normal_steps() {
        let ll = -3.0 * (2.0 * std::f64::consts::PI).ln();
        let mut t = Trajectory::default();
        for _ in 0..3 {
            t.push(step(ll, false));
        }
        assert!((trajectory_return(&t).unwrap() - -16.5408).abs() < 1e-3);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(
            trajectory_return(&Trajectory::default()),
            Err(Error::EmptyTrajectory)
        ));
    }

    #[test]
    fn jsonl_round_trip() {
        let mut t = Trajectory::starting_at(4);
        t.push(step(-1.5, false));
        t.push(step(0.0, true));
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for key in ["t", "state", "action", "reward", "event"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
        assert_eq!(first["t"], 4);
        let back = Trajectory::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }
}

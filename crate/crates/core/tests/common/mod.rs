#![allow(dead_code)]

use mfast_core::ast::{EnvironmentAction, Simulator, Snapshot, StepOutcome};
use mfast_core::{Error, Result};

/// Deterministic stand-in simulator. An episode fails on its last step when
/// it was started (reset or restored) at `t >= fail_from`; `None` never fails.
#[derive(Debug, Clone)]
pub struct ScriptedSim {
    pub horizon: usize,
    pub fail_from: Option<usize>,
    t: usize,
    start: usize,
    done: bool,
    steps: u64,
}

impl ScriptedSim {
    pub fn new(horizon: usize, fail_from: Option<usize>) -> Self {
        Self {
            horizon,
            fail_from,
            t: 0,
            start: 0,
            done: false,
            steps: 0,
        }
    }
}

impl Simulator for ScriptedSim {
    fn action_dim(&self) -> usize {
        1
    }

    fn observation_dim(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn reset(&mut self, _seed: u64) -> Snapshot {
        self.t = 0;
        self.start = 0;
        self.done = false;
        self.snapshot()
    }

    fn step(&mut self, action: &EnvironmentAction) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Terminal);
        }
        action.validate(1)?;
        self.t += 1;
        self.steps += 1;
        let last = self.t == self.horizon;
        let event = last && self.fail_from.is_some_and(|f| self.start >= f);
        self.done = last;
        let a = action.values()[0];
        Ok(StepOutcome {
            event,
            log_likelihood: -0.5 * a * a,
            terminal: last,
            miss_distance: if event { 0.0 } else { 1.0 },
        })
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot((self.t as u64).to_le_bytes().to_vec())
    }

    fn restore(&mut self, snapshot: &Snapshot) -> Result<()> {
        let bytes: [u8; 8] = snapshot
            .as_bytes()
            .try_into()
            .map_err(|_| Error::MalformedSnapshot("expected 8 bytes".into()))?;
        let t = u64::from_le_bytes(bytes) as usize;
        if t >= self.horizon {
            return Err(Error::MalformedSnapshot(format!(
                "t = {t} is past the horizon"
            )));
        }
        self.t = t;
        self.start = t;
        self.done = false;
        Ok(())
    }

    fn steps_taken(&self) -> u64 {
        self.steps
    }

    fn t(&self) -> usize {
        self.t
    }

    fn is_terminal(&self) -> bool {
        self.done
    }

    fn observe(&self) -> Vec<f64> {
        vec![
            self.t as f64 / self.horizon as f64,
            self.start as f64 / self.horizon as f64,
        ]
    }

    fn fingerprint(&self) -> [u8; 8] {
        [0; 8]
    }
}

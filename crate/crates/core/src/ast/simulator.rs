use base64::Engine;
use serde::{Deserialize, Serialize};

use super::StepOutcome;
use crate::error::{Error, Result};

/// One environment action: the disturbances the solver injects into the
/// simulator for a single step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnvironmentAction(pub Vec<f64>);

impl EnvironmentAction {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Checks the dimension against the scenario and that every entry is finite.
    pub fn validate(&self, expected_dim: usize) -> Result<()> {
        if self.0.len() != expected_dim {
            return Err(Error::ActionDimension {
                expected: expected_dim,
                actual: self.0.len(),
            });
        }
        match self.0.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFiniteAction(i)),
            None => Ok(()),
        }
    }
}

/// Exact byte image of a simulator state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Snapshot(pub Vec<u8>);

impl Snapshot {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_base64(&self) -> String {
        base64::engine::general_purpose::STANDARD.encode(&self.0)
    }

    pub fn from_base64(s: &str) -> Result<Self> {
        base64::engine::general_purpose::STANDARD
            .decode(s)
            .map(Snapshot)
            .map_err(|e| Error::MalformedSnapshot(e.to_string()))
    }
}

impl Serialize for Snapshot {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_base64())
    }
}

impl<'de> Deserialize<'de> for Snapshot {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Snapshot::from_base64(&s).map_err(serde::de::Error::custom)
    }
}

/// The black-box simulator seen by the solver.
///
/// Implementations must be deterministic: the same seed and action sequence
/// yields bit-identical states, and `restore(snapshot())` reproduces the
/// original continuation exactly. `steps_taken` counts every `step` call over
/// the lifetime of the instance and is never touched by `reset`, `snapshot`
/// or `restore`.
pub trait Simulator {
    fn action_dim(&self) -> usize;
    fn observation_dim(&self) -> usize;
    fn horizon(&self) -> usize;

    /// Starts a new episode from the scenario's initial state.
    fn reset(&mut self, seed: u64) -> Snapshot;

    fn step(&mut self, action: &EnvironmentAction) -> Result<StepOutcome>;

    fn snapshot(&self) -> Snapshot;

    fn restore(&mut self, snapshot: &Snapshot) -> Result<()>;

    fn steps_taken(&self) -> u64;

    /// Completed steps in the current episode.
    fn t(&self) -> usize;

    fn is_terminal(&self) -> bool;

    /// Solver input for the current state.
    fn observe(&self) -> Vec<f64>;

    /// Stable identifier of the configuration; snapshots carry it.
    fn fingerprint(&self) -> [u8; 8];
}

impl<S: Simulator + ?Sized> Simulator for Box<S> {
    fn action_dim(&self) -> usize {
        (**self).action_dim()
    }
    fn observation_dim(&self) -> usize {
        (**self).observation_dim()
    }
    fn horizon(&self) -> usize {
        (**self).horizon()
    }
    fn reset(&mut self, seed: u64) -> Snapshot {
        (**self).reset(seed)
    }
    fn step(&mut self, action: &EnvironmentAction) -> Result<StepOutcome> {
        (**self).step(action)
    }
    fn snapshot(&self) -> Snapshot {
        (**self).snapshot()
    }
    fn restore(&mut self, snapshot: &Snapshot) -> Result<()> {
        (**self).restore(snapshot)
    }
    fn steps_taken(&self) -> u64 {
        (**self).steps_taken()
    }
    fn t(&self) -> usize {
        (**self).t()
    }
    fn is_terminal(&self) -> bool {
        (**self).is_terminal()
    }
    fn observe(&self) -> Vec<f64> {
        (**self).observe()
    }
    fn fingerprint(&self) -> [u8; 8] {
        (**self).fingerprint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_validation() {
        assert!(EnvironmentAction::zeros(6).validate(6).is_ok());
        assert!(matches!(
            EnvironmentAction::zeros(3).validate(6),
            Err(Error::ActionDimension {
                expected: 6,
                actual: 3
            })
        ));
        assert!(matches!(
            EnvironmentAction::new(vec![0.0, f64::INFINITY]).validate(2),
            Err(Error::NonFiniteAction(1))
        ));
    }

    #[test]
    fn snapshot_base64_round_trip() {
        let s = Snapshot(vec![0, 1, 2, 250, 255]);
        let json = serde_json::to_string(&s).unwrap();
        let back: Snapshot = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }
}

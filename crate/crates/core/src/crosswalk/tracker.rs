use serde::{Deserialize, Serialize};

use super::config::TrackerGains;

/// Fixed-gain position/velocity filter state, world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackerState {
    pub p_hat: [f64; 2],
    pub v_hat: [f64; 2],
    pub initialized: bool,
}

impl TrackerState {
    /// Constant-velocity prediction, used when there is no measurement.
    pub fn predict(&self, dt: f64) -> TrackerState {
        if !self.initialized {
            return *self;
        }
        let mut next = *self;
        for i in 0..2 {
            next.p_hat[i] += self.v_hat[i] * dt;
        }
        next
    }
}

/// Alpha-beta update with position measurement `z`. The first measurement
/// initializes the filter at `z` with `measured_velocity` (zero if the sensor
/// has none).
pub fn tracker_update(
    trk: &TrackerState,
    z: [f64; 2],
    measured_velocity: Option<[f64; 2]>,
    dt: f64,
    gains: &TrackerGains,
) -> TrackerState {
    if !trk.initialized {
        return TrackerState {
            p_hat: z,
            v_hat: measured_velocity.unwrap_or([0.0; 2]),
            initialized: true,
        };
    }
    let mut next = *trk;
    for i in 0..2 {
        let p_pred = trk.p_hat[i] + trk.v_hat[i] * dt;
        let r = z[i] - p_pred;
        next.p_hat[i] = p_pred + gains.alpha * r;
        next.v_hat[i] = trk.v_hat[i] + (gains.beta / dt) * r;
    }
    next
}

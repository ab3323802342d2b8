//! Vehicle and pedestrian motion: the modified IDM driver and
//! double-integrator kinematics.

use serde::{Deserialize, Serialize};

use super::config::{IdmParams, ScenarioConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Longitudinal position of the vehicle center; the crosswalk is at x = 0.
    pub x: f64,
    pub v: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedestrianState {
    /// x along the road, y lateral with the SUT lane centered at y = 0.
    pub p: [f64; 2],
    pub v: [f64; 2],
}

/// Leading obstacle as seen by the driver model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lead {
    /// Bumper-to-obstacle distance, m.
    pub gap: f64,
    pub speed: f64,
}

/// Intelligent driver model acceleration, clamped to `[decel_limit, a_max]`.
pub fn idm_acceleration(veh: &VehicleState, lead: Option<Lead>, params: &IdmParams) -> Result<f64> {
    let free = 1.0 - (veh.v / params.v_desired).powf(params.delta);
    let interaction = match lead {
        None => 0.0,
        Some(lead) => {
            if !(lead.gap > 0.0) {
                return Err(Error::Geometry(format!(
                    "lead gap must be positive, got {}",
                    lead.gap
                )));
            }
            let dv = veh.v - lead.speed;
            let s_star = params.s0
                + veh.v * params.t_headway
                + veh.v * dv / (2.0 * (params.a_max * params.b_comfort).sqrt());
            (s_star / lead.gap).powi(2)
        }
    };
    let a = params.a_max * (free - interaction);
    Ok(a.clamp(params.decel_limit, params.a_max))
}

/// Strictly inside the street band; the band edges themselves are sidewalk.
pub fn pedestrian_in_street(ped: &PedestrianState, cfg: &ScenarioConfig) -> bool {
    let y = ped.p[1];
    cfg.street_y_min < y && y < cfg.street_y_max
}

pub fn pedestrian_step(ped: &PedestrianState, accel: [f64; 2], dt: f64) -> PedestrianState {
    let mut next = *ped;
    for i in 0..2 {
        next.p[i] = ped.p[i] + ped.v[i] * dt + 0.5 * accel[i] * dt * dt;
        next.v[i] = ped.v[i] + accel[i] * dt;
    }
    next
}

/// Advances the vehicle under constant acceleration `a` for `dt`. A vehicle
/// that would reverse instead stops where its speed reaches zero.
pub fn vehicle_step(veh: &VehicleState, a: f64, dt: f64) -> VehicleState {
    let v_end = veh.v + a * dt;
    if v_end >= 0.0 {
        VehicleState {
            x: veh.x + veh.v * dt + 0.5 * a * dt * dt,
            v: v_end,
            a,
        }
    } else {
        let t_stop = veh.v / -a;
        VehicleState {
            x: veh.x + veh.v * t_stop + 0.5 * a * t_stop * t_stop,
            v: 0.0,
            a,
        }
    }
}

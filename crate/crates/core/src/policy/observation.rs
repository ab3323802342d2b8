//! Fixed solver-input encoding of the crosswalk state.

use crate::crosswalk::{CrosswalkState, FidelityConfig, ScenarioConfig, SensorModel};

/// `[veh.x, veh.v, ped.p(2), ped.v(2), t/horizon]` followed by the SUT's
/// pedestrian estimate: position and velocity for direct sensing, position
/// only for lidar. An absent estimate encodes as zeros.
pub fn encode_crosswalk(
    state: &CrosswalkState,
    scenario: &ScenarioConfig,
    fidelity: &FidelityConfig,
) -> Vec<f64> {
    let s = &scenario.observation;
    let mut obs = Vec::with_capacity(crosswalk_dim(fidelity.sensor_model));
    obs.push(state.vehicle.x / s.position_x);
    obs.push(state.vehicle.v / s.speed);
    obs.push(state.pedestrian.p[0] / s.pedestrian_position);
    obs.push(state.pedestrian.p[1] / s.pedestrian_position);
    obs.push(state.pedestrian.v[0] / s.pedestrian_speed);
    obs.push(state.pedestrian.v[1] / s.pedestrian_speed);
    obs.push(state.t as f64 / fidelity.horizon as f64);
    let est = &state.percept;
    let (p, v) = if est.valid {
        (est.p, est.v)
    } else {
        ([0.0; 2], [0.0; 2])
    };
    obs.push(p[0] / s.pedestrian_position);
    obs.push(p[1] / s.pedestrian_position);
    if fidelity.sensor_model == SensorModel::Direct {
        obs.push(v[0] / s.pedestrian_speed);
        obs.push(v[1] / s.pedestrian_speed);
    }
    obs
}

pub fn crosswalk_dim(sensor: SensorModel) -> usize {
    match sensor {
        SensorModel::Direct => 11,
        SensorModel::Lidar => 9,
    }
}

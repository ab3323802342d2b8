use super::config::ScenarioConfig;
use super::dynamics::{PedestrianState, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub event: bool,
    /// Clearance between the pedestrian disc and the vehicle rectangle; 0 on contact.
    pub miss_distance: f64,
}

/// Pedestrian disc against the vehicle's axis-aligned footprint centered at
/// `(veh.x, 0)`. Touching counts as a collision.
pub fn collision_check(veh: &VehicleState, ped: &PedestrianState, cfg: &ScenarioConfig) -> Contact {
    let dx = ((ped.p[0] - veh.x).abs() - 0.5 * cfg.car_length).max(0.0);
    let dy = (ped.p[1].abs() - 0.5 * cfg.car_width).max(0.0);
    let dist = dx.hypot(dy);
    Contact {
        event: dist <= cfg.ped_radius,
        miss_distance: (dist - cfg.ped_radius).max(0.0),
    }
}

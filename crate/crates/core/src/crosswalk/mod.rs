//! Pedestrian-crossing scenario: a vehicle driven by a modified IDM
//! approaches a crosswalk while a pedestrian crosses. The adversary controls
//! the pedestrian's acceleration and the SUT's sensor noise.

mod config;
mod dynamics;
mod geometry;
mod quantize;
mod sensing;
mod sim;
mod tracker;

pub use config::{
    fingerprint, ActionSigma, FidelityConfig, IdmParams, LidarConfig, ObservationScales,
    ScenarioConfig, SensorModel, TrackerGains,
};
pub use dynamics::{
    idm_acceleration, pedestrian_in_street, pedestrian_step, vehicle_step, Lead, PedestrianState,
    VehicleState,
};
pub use geometry::{collision_check, Contact};
pub use quantize::{is_rounded, round_to};
pub use sensing::{
    beam_angle, beam_width, sense_direct, sense_lidar, DirectMeasurement, LidarScan,
};
pub use sim::{CrosswalkSim, CrosswalkState, Percept};
pub use tracker::{tracker_update, TrackerState};

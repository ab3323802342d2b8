use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    pub v_desired: f64,
    pub a_max: f64,
    pub b_comfort: f64,
    pub delta: f64,
    pub s0: f64,
    pub t_headway: f64,
    /// Hardest deceleration the vehicle will command (negative).
    pub decel_limit: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            v_desired: 11.17,
            a_max: 2.0,
            b_comfort: 4.0,
            delta: 4.0,
            s0: 2.0,
            t_headway: 1.5,
            decel_limit: -8.0,
        }
    }
}

/// Per-channel standard deviations of the environment action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSigma {
    /// Pedestrian acceleration, m/s^2 (both axes).
    pub accel: f64,
    /// Direct-sensor position noise, m.
    pub position_noise: f64,
    /// Direct-sensor velocity noise, m/s.
    pub velocity_noise: f64,
    /// Lidar per-beam range noise, m.
    pub beam_noise: f64,
}

impl Default for ActionSigma {
    fn default() -> Self {
        Self {
            accel: 1.0,
            position_noise: 0.3,
            velocity_noise: 0.3,
            beam_noise: 0.5,
        }
    }
}

impl ActionSigma {
    pub fn channels(&self, sensor: SensorModel) -> Vec<f64> {
        match sensor {
            SensorModel::Direct => vec![
                self.accel,
                self.accel,
                self.position_noise,
                self.position_noise,
                self.velocity_noise,
                self.velocity_noise,
            ],
            SensorModel::Lidar => vec![self.accel, self.accel, self.beam_noise],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerGains {
    pub alpha: f64,
    pub beta: f64,
}

impl TrackerGains {
    /// Critically damped pairing `beta = alpha^2 / (2 - alpha)`.
    pub fn critically_damped(alpha: f64) -> Self {
        Self {
            alpha,
            beta: alpha * alpha / (2.0 - alpha),
        }
    }
}

impl Default for TrackerGains {
    fn default() -> Self {
        Self::critically_damped(0.85)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarConfig {
    pub n_beams: usize,
    /// Total angular coverage, degrees, centered on the heading.
    pub fov: f64,
    pub max_range: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            n_beams: 30,
            fov: 180.0,
            max_range: 100.0,
        }
    }
}

impl LidarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_beams < 2 {
            return Err(Error::InvalidConfig("lidar needs at least 2 beams".into()));
        }
        if !(self.fov > 0.0 && self.fov <= 360.0) {
            return Err(Error::InvalidConfig("lidar fov must be in (0, 360]".into()));
        }
        if !(self.max_range > 0.0) {
            return Err(Error::InvalidConfig(
                "lidar max_range must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Fixed normalization of the solver observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationScales {
    pub position_x: f64,
    pub speed: f64,
    pub pedestrian_position: f64,
    pub pedestrian_speed: f64,
}

impl Default for ObservationScales {
    fn default() -> Self {
        Self {
            position_x: 100.0,
            speed: 11.17,
            pedestrian_position: 10.0,
            pedestrian_speed: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub car_x0: f64,
    pub car_v0: f64,
    pub ped_p0: [f64; 2],
    pub ped_v0: [f64; 2],
    pub street_y_min: f64,
    pub street_y_max: f64,
    pub idm: IdmParams,
    pub car_length: f64,
    pub car_width: f64,
    pub ped_radius: f64,
    pub action_sigma: ActionSigma,
    pub tracker: TrackerGains,
    pub lidar: LidarConfig,
    pub observation: ObservationScales,
    /// Componentwise bound on the pedestrian acceleration, if any.
    pub ped_accel_limit: Option<f64>,
    /// The vehicle stops for good once the pedestrian comes within this
    /// distance of its center.
    pub emergency_brake_range: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            car_x0: -55.0,
            car_v0: 11.17,
            ped_p0: [0.0, -1.85],
            ped_v0: [0.0, 1.0],
            street_y_min: -1.85,
            street_y_max: 5.55,
            idm: IdmParams::default(),
            car_length: 4.5,
            car_width: 2.0,
            ped_radius: 0.3,
            action_sigma: ActionSigma::default(),
            tracker: TrackerGains::default(),
            lidar: LidarConfig::default(),
            observation: ObservationScales::default(),
            ped_accel_limit: None,
            emergency_brake_range: None,
        }
    }
}

impl ScenarioConfig {
    /// Initial conditions used with the lidar perception stack: pedestrian at
    /// y = -2.0 on the sidewalk, vehicle 45 m from the crosswalk.
    pub fn perception() -> Self {
        Self {
            car_x0: -45.0,
            ped_p0: [0.0, -2.0],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.street_y_min < self.street_y_max) {
            return Err(Error::InvalidConfig(
                "street_y_min must be below street_y_max".into(),
            ));
        }
        for (name, v) in [
            ("car_length", self.car_length),
            ("car_width", self.car_width),
            ("ped_radius", self.ped_radius),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        let s = &self.action_sigma;
        if [s.accel, s.position_noise, s.velocity_noise, s.beam_noise]
            .iter()
            .any(|v| !(*v > 0.0))
        {
            return Err(Error::InvalidConfig(
                "action sigmas must be positive".into(),
            ));
        }
        let g = &self.tracker;
        if !(g.alpha > 0.0 && g.alpha < 1.0 && g.beta > 0.0) {
            return Err(Error::InvalidConfig(
                "tracker gains need 0 < alpha < 1, beta > 0".into(),
            ));
        }
        if !(self.idm.decel_limit < 0.0 && self.idm.a_max > 0.0 && self.idm.v_desired > 0.0) {
            return Err(Error::InvalidConfig("bad IDM parameters".into()));
        }
        self.lidar.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorModel {
    Direct,
    Lidar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityConfig {
    pub dt: f64,
    pub horizon: usize,
    #[serde(default)]
    pub quantize_decimals: Option<u32>,
    pub tracker_enabled: bool,
    pub sensor_model: SensorModel,
}

impl FidelityConfig {
    /// 0.1 s steps for 50 steps with tracking and direct sensing.
    pub fn hifi() -> Self {
        Self {
            dt: 0.1,
            horizon: 50,
            quantize_decimals: None,
            tracker_enabled: true,
            sensor_model: SensorModel::Direct,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        if self.horizon < 1 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        Ok(())
    }

    pub fn action_dim(&self) -> usize {
        match self.sensor_model {
            SensorModel::Direct => 6,
            SensorModel::Lidar => 3,
        }
    }
}

impl Default for FidelityConfig {
    fn default() -> Self {
        Self::hifi()
    }
}

/// First 8 bytes of SHA-256 over the canonical JSON of both configs.
pub fn fingerprint(scenario: &ScenarioConfig, fidelity: &FidelityConfig) -> [u8; 8] {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(scenario).expect("config serializes"));
    hasher.update(b"|");
    hasher.update(serde_json::to_vec(fidelity).expect("config serializes"));
    let digest = hasher.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    out
}

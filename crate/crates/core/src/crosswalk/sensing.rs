//! SUT perception front ends: additive-noise direct sensing and a planar
//! lidar with per-beam range noise.

use std::f64::consts::PI;

use super::config::LidarConfig;
use super::dynamics::{PedestrianState, VehicleState};

/// Pedestrian position relative to the vehicle center and its velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectMeasurement {
    pub rel_position: [f64; 2],
    pub velocity: [f64; 2],
}

/// Truth plus `noise = [dx, dy, dvx, dvy]`, componentwise.
pub fn sense_direct(
    ped: &PedestrianState,
    veh: &VehicleState,
    noise: [f64; 4],
) -> DirectMeasurement {
    DirectMeasurement {
        rel_position: [ped.p[0] - veh.x + noise[0], ped.p[1] + noise[1]],
        velocity: [ped.v[0] + noise[2], ped.v[1] + noise[3]],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    pub readings: Vec<f64>,
    /// Centroid of the detecting beams' return points, relative to the vehicle.
    pub est_position: Option<[f64; 2]>,
}

/// Smallest reading a beam can report.
const MIN_READING: f64 = 1e-3;

fn wrap_angle(a: f64) -> f64 {
    let mut a = (a + PI).rem_euclid(2.0 * PI) - PI;
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Beam `i` center bearing, radians; beams tile the field of view evenly.
pub fn beam_angle(cfg: &LidarConfig, i: usize) -> f64 {
    let width = beam_width(cfg);
    -0.5 * cfg.fov.to_radians() + (i as f64 + 0.5) * width
}

pub fn beam_width(cfg: &LidarConfig) -> f64 {
    cfg.fov.to_radians() / cfg.n_beams as f64
}

/// Nearest return of the disc `(center, radius)` inside the angular sector
/// `center_angle +- half_width`, as `(range, bearing)`.
fn sector_return(
    center: [f64; 2],
    radius: f64,
    center_angle: f64,
    half_width: f64,
) -> Option<(f64, f64)> {
    let d = center[0].hypot(center[1]);
    let bearing = center[1].atan2(center[0]);
    if d <= radius {
        // Sensor origin inside the disc.
        return Some((MIN_READING, center_angle));
    }
    let offset = wrap_angle(bearing - center_angle);
    if offset.abs() <= half_width {
        return Some((d - radius, bearing));
    }
    let angular_radius = (radius / d).asin();
    if offset.abs() - half_width > angular_radius {
        return None;
    }
    let edge = center_angle + half_width * offset.signum();
    let u = [edge.cos(), edge.sin()];
    let along = center[0] * u[0] + center[1] * u[1];
    let perp2 = d * d - along * along;
    let disc = radius * radius - perp2;
    if disc < 0.0 || along <= 0.0 {
        return None;
    }
    Some((along - disc.sqrt(), edge))
}

/// One scan from the vehicle center, heading +x. Each beam covers an equal
/// angular sector and reports the nearest pedestrian surface inside it;
/// `beam_noise` shifts only the beams that detect something.
pub fn sense_lidar(
    ped: &PedestrianState,
    veh: &VehicleState,
    beam_noise: f64,
    radius: f64,
    cfg: &LidarConfig,
) -> LidarScan {
    let rel = [ped.p[0] - veh.x, ped.p[1]];
    let half = 0.5 * beam_width(cfg);
    let mut readings = Vec::with_capacity(cfg.n_beams);
    let mut sum = [0.0; 2];
    let mut hits = 0usize;
    for i in 0..cfg.n_beams {
        let ret = sector_return(rel, radius, beam_angle(cfg, i), half)
            .filter(|(r, _)| *r < cfg.max_range);
        match ret {
            Some((range, bearing)) => {
                let noisy = (range + beam_noise).clamp(MIN_READING, cfg.max_range);
                sum[0] += noisy * bearing.cos();
                sum[1] += noisy * bearing.sin();
                hits += 1;
                readings.push(noisy);
            }
            None => readings.push(cfg.max_range),
        }
    }
    let est_position = (hits > 0).then(|| [sum[0] / hits as f64, sum[1] / hits as f64]);
    LidarScan {
        readings,
        est_position,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ped(x: f64, y: f64) -> PedestrianState {
        PedestrianState {
            p: [x, y],
            v: [0.0, 0.0],
        }
    }

    const CAR: VehicleState = VehicleState {
        x: 0.0,
        v: 0.0,
        a: 0.0,
    };

    #[test]
    fn direct_zero_noise_is_truth() {
        let m = sense_direct(
            &ped(3.0, -1.0),
            &VehicleState {
                x: 1.0,
                v: 0.0,
                a: 0.0,
            },
            [0.0; 4],
        );
        assert_eq!(m.rel_position, [2.0, -1.0]);
        let m = sense_direct(&ped(0.0, -1.0), &CAR, [0.3, 0.0, 0.0, 0.0]);
        assert!((m.rel_position[0] - 0.3).abs() < 1e-15);
        let m = sense_direct(&ped(0.0, -1.0), &CAR, [0.1, -0.1, 0.0, 0.0]);
        assert!((m.rel_position[0] - 0.1).abs() < 1e-15);
        assert!((m.rel_position[1] - -1.1).abs() < 1e-15);
    }

    #[test]
    fn pedestrian_behind_is_invisible() {
        let cfg = LidarConfig::default();
        let scan = sense_lidar(&ped(-10.0, 0.0), &CAR, 0.5, 0.3, &cfg);
        assert!(scan.readings.iter().all(|&r| r == cfg.max_range));
        assert!(scan.est_position.is_none());
    }

    #[test]
    fn on_axis_reading() {
        let cfg = LidarConfig::default();
        let i = 17;
        let th = beam_angle(&cfg, i);
        let p = ped(10.0 * th.cos(), 10.0 * th.sin());
        let scan = sense_lidar(&p, &CAR, 0.0, 0.3, &cfg);
        assert!((scan.readings[i] - 9.7).abs() < 1e-12);
        let noisy = sense_lidar(&p, &CAR, 0.5, 0.3, &cfg);
        assert!((noisy.readings[i] - 10.2).abs() < 1e-12);
        for (j, (a, b)) in scan.readings.iter().zip(&noisy.readings).enumerate() {
            if *a == cfg.max_range {
                assert_eq!(*b, cfg.max_range, "beam {j}");
            }
        }
    }

    #[test]
    fn estimate_within_radius_without_noise() {
        let cfg = LidarConfig::default();
        for &(x, y) in &[(30.0, -1.85), (12.0, 0.0), (5.0, 3.0), (50.0, 1.0)] {
            let scan = sense_lidar(&ped(x, y), &CAR, 0.0, 0.3, &cfg);
            let est = scan.est_position.expect("detected");
            let err = (est[0] - x).hypot(est[1] - y);
            assert!(err <= 0.3 + 1e-9, "({x},{y}) err {err}");
        }
    }

    #[test]
    fn beyond_max_range_is_invisible() {
        let cfg = LidarConfig {
            max_range: 20.0,
            ..LidarConfig::default()
        };
        let scan = sense_lidar(&ped(30.0, 0.0), &CAR, 0.0, 0.3, &cfg);
        assert!(scan.est_position.is_none());
    }

    #[test]
    fn wrap_angle_range() {
        for a in [-7.0, -PI, 0.0, PI, 3.5, 10.0] {
            let w = wrap_angle(a);
            assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
        }
    }
}

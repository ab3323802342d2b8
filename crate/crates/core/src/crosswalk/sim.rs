use serde::{Deserialize, Serialize};

use super::config::{fingerprint, FidelityConfig, ScenarioConfig, SensorModel};
use super::dynamics::{
    idm_acceleration, pedestrian_in_street, pedestrian_step, vehicle_step, Lead, PedestrianState,
    VehicleState,
};
use super::geometry::collision_check;
use super::quantize::round_to;
use super::sensing::{sense_direct, sense_lidar};
use super::tracker::{tracker_update, TrackerState};
use crate::ast::{gaussian_log_density, EnvironmentAction, Simulator, Snapshot, StepOutcome};
use crate::error::{Error, Result};
use crate::policy::observation;

/// What the SUT believes about the pedestrian, world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Percept {
    pub p: [f64; 2],
    pub v: [f64; 2],
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosswalkState {
    pub t: usize,
    pub vehicle: VehicleState,
    pub pedestrian: PedestrianState,
    pub tracker: TrackerState,
    pub percept: Percept,
    /// Previous lidar centroid, world frame, for finite-difference velocity.
    pub last_detection: Option<[f64; 2]>,
    pub min_clearance: f64,
    pub brake_latched: bool,
    pub event: bool,
}

impl CrosswalkState {
    /// Every real-valued state component that quantization applies to.
    pub fn real_components(&self) -> Vec<f64> {
        let mut out = vec![self.vehicle.x, self.vehicle.v, self.vehicle.a];
        out.extend(self.pedestrian.p);
        out.extend(self.pedestrian.v);
        out.extend(self.tracker.p_hat);
        out.extend(self.tracker.v_hat);
        out.extend(self.percept.p);
        out.extend(self.percept.v);
        if let Some(d) = self.last_detection {
            out.extend(d);
        }
        out
    }

    fn quantize(&mut self, decimals: u32) {
        let q = |x: &mut f64| *x = round_to(*x, decimals);
        q(&mut self.vehicle.x);
        q(&mut self.vehicle.v);
        q(&mut self.vehicle.a);
        self.pedestrian.p.iter_mut().for_each(q);
        self.pedestrian.v.iter_mut().for_each(q);
        self.tracker.p_hat.iter_mut().for_each(q);
        self.tracker.v_hat.iter_mut().for_each(q);
        self.percept.p.iter_mut().for_each(q);
        self.percept.v.iter_mut().for_each(q);
        if let Some(d) = self.last_detection.as_mut() {
            d.iter_mut().for_each(q);
        }
    }
}

const MAGIC: &[u8; 4] = b"XWK1";
const SNAPSHOT_LEN: usize = 4 + 8 + 8 + 1 + 18 * 8;

/// The pedestrian-crossing scenario behind the [`Simulator`] contract.
///
/// Action layout: `[ped_ax, ped_ay, noise...]` where the noise channels are
/// `[dx, dy, dvx, dvy]` for direct sensing or a single beam-range offset for
/// lidar.
#[derive(Debug, Clone)]
pub struct CrosswalkSim {
    scenario: ScenarioConfig,
    fidelity: FidelityConfig,
    sigmas: Vec<f64>,
    zeros: Vec<f64>,
    fingerprint: [u8; 8],
    state: CrosswalkState,
    steps_taken: u64,
}

impl CrosswalkSim {
    pub fn new(scenario: ScenarioConfig, fidelity: FidelityConfig) -> Result<Self> {
        scenario.validate()?;
        fidelity.validate()?;
        let sigmas = scenario.action_sigma.channels(fidelity.sensor_model);
        let zeros = vec![0.0; sigmas.len()];
        let fingerprint = fingerprint(&scenario, &fidelity);
        let mut sim = Self {
            state: initial_state(&scenario, &fidelity),
            scenario,
            fidelity,
            sigmas,
            zeros,
            fingerprint,
            steps_taken: 0,
        };
        sim.state = sim.initial();
        Ok(sim)
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    pub fn fidelity(&self) -> &FidelityConfig {
        &self.fidelity
    }

    pub fn state(&self) -> &CrosswalkState {
        &self.state
    }

    pub fn action_sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    fn initial(&self) -> CrosswalkState {
        initial_state(&self.scenario, &self.fidelity)
    }

    pub fn decode(&self, snapshot: &Snapshot) -> Result<CrosswalkState> {
        decode_state(snapshot, &self.fingerprint)
    }

    /// Pure transition function over an explicit state.
    pub fn transition(
        &self,
        state: &CrosswalkState,
        action: &EnvironmentAction,
    ) -> Result<(CrosswalkState, StepOutcome)> {
        action.validate(self.sigmas.len())?;
        let sc = &self.scenario;
        let fi = &self.fidelity;
        let dt = fi.dt;
        let a = action.values();

        let mut accel = [a[0], a[1]];
        if let Some(limit) = sc.ped_accel_limit {
            accel = accel.map(|v| v.clamp(-limit, limit));
        }

        let veh = state.vehicle;
        let ped = state.pedestrian;
        let mut next = *state;

        // Perception.
        let (z, z_vel) = match fi.sensor_model {
            SensorModel::Direct => {
                let m = sense_direct(&ped, &veh, [a[2], a[3], a[4], a[5]]);
                let z = [m.rel_position[0] + veh.x, m.rel_position[1]];
                (Some(z), Some(m.velocity))
            }
            SensorModel::Lidar => {
                let scan = sense_lidar(&ped, &veh, a[2], sc.ped_radius, &sc.lidar);
                let z = scan.est_position.map(|e| [e[0] + veh.x, e[1]]);
                let vel = match (z, state.last_detection) {
                    (Some(z), Some(prev)) => Some([(z[0] - prev[0]) / dt, (z[1] - prev[1]) / dt]),
                    _ => None,
                };
                next.last_detection = z;
                (z, vel)
            }
        };
        if fi.tracker_enabled {
            next.tracker = match z {
                Some(z) => tracker_update(&state.tracker, z, z_vel, dt, &sc.tracker),
                None => state.tracker.predict(dt),
            };
            next.percept = Percept {
                p: next.tracker.p_hat,
                v: next.tracker.v_hat,
                valid: next.tracker.initialized,
            };
        } else {
            next.percept = match z {
                Some(z) => Percept {
                    p: z,
                    v: z_vel.unwrap_or([0.0; 2]),
                    valid: true,
                },
                None => Percept::default(),
            };
        }

        // Driver.
        let perceived = PedestrianState {
            p: next.percept.p,
            v: next.percept.v,
        };
        let lead = if next.percept.valid
            && pedestrian_in_street(&perceived, sc)
            && perceived.p[0] >= veh.x - 0.5 * sc.car_length
        {
            Some(Lead {
                gap: (perceived.p[0] - veh.x - 0.5 * sc.car_length).max(MIN_GAP),
                speed: perceived.v[0],
            })
        } else {
            None
        };
        let brake = state.brake_latched
            || sc
                .emergency_brake_range
                .is_some_and(|r| (ped.p[0] - veh.x).hypot(ped.p[1]) < r);
        next.vehicle = if brake {
            next.brake_latched = true;
            VehicleState {
                x: veh.x,
                v: 0.0,
                a: sc.idm.decel_limit,
            }
        } else {
            let cmd = idm_acceleration(&veh, lead, &sc.idm)?;
            vehicle_step(&veh, cmd, dt)
        };
        next.pedestrian = pedestrian_step(&ped, accel, dt);
        next.t = state.t + 1;

        if let Some(d) = fi.quantize_decimals {
            next.quantize(d);
        }

        let contact = collision_check(&next.vehicle, &next.pedestrian, sc);
        next.event = contact.event;
        next.min_clearance = state.min_clearance.min(contact.miss_distance);

        let outcome = StepOutcome {
            event: contact.event,
            log_likelihood: gaussian_log_density(a, &self.zeros, &self.sigmas),
            terminal: contact.event || next.t >= fi.horizon,
            miss_distance: next.min_clearance,
        };
        Ok((next, outcome))
    }
}

const MIN_GAP: f64 = 0.05;

fn initial_state(sc: &ScenarioConfig, fi: &FidelityConfig) -> CrosswalkState {
    let vehicle = VehicleState {
        x: sc.car_x0,
        v: sc.car_v0,
        a: 0.0,
    };
    let pedestrian = PedestrianState {
        p: sc.ped_p0,
        v: sc.ped_v0,
    };
    let mut s = CrosswalkState {
        t: 0,
        vehicle,
        pedestrian,
        tracker: TrackerState::default(),
        percept: Percept::default(),
        last_detection: None,
        min_clearance: f64::INFINITY,
        brake_latched: false,
        event: false,
    };
    if let Some(d) = fi.quantize_decimals {
        s.quantize(d);
    }
    let contact = collision_check(&s.vehicle, &s.pedestrian, sc);
    s.min_clearance = contact.miss_distance;
    s.event = contact.event;
    s
}

struct Writer(Vec<u8>);

impl Writer {
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn pair(&mut self, v: [f64; 2]) {
        self.f64(v[0]);
        self.f64(v[1]);
    }
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let (head, rest) = self.0.split_at(N);
        self.0 = rest;
        head.try_into().expect("length checked")
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
    fn pair(&mut self) -> [f64; 2] {
        [self.f64(), self.f64()]
    }
}

fn encode_state(s: &CrosswalkState, fp: &[u8; 8]) -> Snapshot {
    let mut w = Writer(Vec::with_capacity(SNAPSHOT_LEN));
    w.0.extend_from_slice(MAGIC);
    w.0.extend_from_slice(fp);
    w.0.extend_from_slice(&(s.t as u64).to_le_bytes());
    let flags = (s.tracker.initialized as u8)
        | (s.percept.valid as u8) << 1
        | (s.last_detection.is_some() as u8) << 2
        | (s.brake_latched as u8) << 3
        | (s.event as u8) << 4;
    w.0.push(flags);
    w.f64(s.vehicle.x);
    w.f64(s.vehicle.v);
    w.f64(s.vehicle.a);
    w.pair(s.pedestrian.p);
    w.pair(s.pedestrian.v);
    w.pair(s.tracker.p_hat);
    w.pair(s.tracker.v_hat);
    w.pair(s.percept.p);
    w.pair(s.percept.v);
    w.pair(s.last_detection.unwrap_or([0.0; 2]));
    w.f64(s.min_clearance);
    debug_assert_eq!(w.0.len(), SNAPSHOT_LEN);
    Snapshot(w.0)
}

fn decode_state(snapshot: &Snapshot, fp: &[u8; 8]) -> Result<CrosswalkState> {
    let bytes = snapshot.as_bytes();
    if bytes.len() != SNAPSHOT_LEN || &bytes[..4] != MAGIC {
        return Err(Error::MalformedSnapshot(format!(
            "expected {SNAPSHOT_LEN} bytes of crosswalk state, got {}",
            bytes.len()
        )));
    }
    let mut r = Reader(&bytes[4..]);
    let snap_fp: [u8; 8] = r.take();
    if &snap_fp != fp {
        return Err(Error::ConfigMismatch);
    }
    let t = u64::from_le_bytes(r.take()) as usize;
    let [flags] = r.take::<1>();
    let vehicle = VehicleState {
        x: r.f64(),
        v: r.f64(),
        a: r.f64(),
    };
    let pedestrian = PedestrianState {
        p: r.pair(),
        v: r.pair(),
    };
    let tracker = TrackerState {
        p_hat: r.pair(),
        v_hat: r.pair(),
        initialized: flags & 1 != 0,
    };
    let percept = Percept {
        p: r.pair(),
        v: r.pair(),
        valid: flags & 2 != 0,
    };
    let last = r.pair();
    let min_clearance = r.f64();
    Ok(CrosswalkState {
        t,
        vehicle,
        pedestrian,
        tracker,
        percept,
        last_detection: (flags & 4 != 0).then_some(last),
        min_clearance,
        brake_latched: flags & 8 != 0,
        event: flags & 16 != 0,
    })
}

impl Simulator for CrosswalkSim {
    fn action_dim(&self) -> usize {
        self.sigmas.len()
    }

    fn observation_dim(&self) -> usize {
        observation::crosswalk_dim(self.fidelity.sensor_model)
    }

    fn horizon(&self) -> usize {
        self.fidelity.horizon
    }

    /// The scenario's initial state is deterministic; all randomness enters
    /// through the environment actions, so the seed is not consumed.
    fn reset(&mut self, _seed: u64) -> Snapshot {
        self.state = self.initial();
        self.snapshot()
    }

    fn step(&mut self, action: &EnvironmentAction) -> Result<StepOutcome> {
        if self.is_terminal() {
            return Err(Error::Terminal);
        }
        let (next, outcome) = self.transition(&self.state, action)?;
        self.state = next;
        self.steps_taken += 1;
        Ok(outcome)
    }

    fn snapshot(&self) -> Snapshot {
        encode_state(&self.state, &self.fingerprint)
    }

    fn restore(&mut self, snapshot: &Snapshot) -> Result<()> {
        self.state = decode_state(snapshot, &self.fingerprint)?;
        Ok(())
    }

    fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    fn t(&self) -> usize {
        self.state.t
    }

    fn is_terminal(&self) -> bool {
        self.state.event || self.state.t >= self.fidelity.horizon
    }

    fn observe(&self) -> Vec<f64> {
        observation::encode_crosswalk(&self.state, &self.scenario, &self.fidelity)
    }

    fn fingerprint(&self) -> [u8; 8] {
        self.fingerprint
    }
}

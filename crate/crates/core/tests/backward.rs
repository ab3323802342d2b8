mod common;

use common::ScriptedSim;
use mfast_core::ast::{EnvironmentAction, Simulator, Trajectory, TrajectoryStep};
use mfast_core::backward::{
    adapt_remap, adapt_repeat, adapt_replay, run_backward, warm_start, BaConfig, BaOutcomeKind,
    DemoSource, ExpertDemonstration,
};
use mfast_core::crosswalk::{CrosswalkSim, FidelityConfig, ScenarioConfig, SensorModel};
use mfast_core::policy::{Checkpoint, PolicyParams, PolicyShape};
use mfast_core::ppo::{DrlSolver, PpoConfig};
use mfast_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fake_demo(sim: &mut ScriptedSim, len: usize) -> ExpertDemonstration {
    let actions = (0..len).map(|_| EnvironmentAction::new(vec![0.0]));
    ExpertDemonstration::record(sim, actions, DemoSource::default())
        .unwrap()
        .0
}

fn small_solver(seed: u64) -> DrlSolver {
    let shape = PolicyShape {
        obs_dim: 2,
        hidden: 4,
        action_dim: 1,
    };
    let params = PolicyParams::init(shape, &mut ChaCha8Rng::seed_from_u64(seed));
    let cfg = PpoConfig {
        batch_size: 60,
        hidden: 4,
        update_epochs: 2,
        ..PpoConfig::default()
    };
    DrlSolver::new(params, cfg, seed)
}

/// Replays the schedule rules by hand for a simulator that fails exactly
/// when started at or after `fail_from`.
fn expected_trace(
    len: usize,
    fail_from: usize,
    cfg: &BaConfig,
) -> (Vec<(usize, bool, bool)>, BaOutcomeKind) {
    let mut trace = Vec::new();
    let mut tau = len - cfg.start_offset;
    let mut at_tau = 0;
    let mut forced_run = 0;
    loop {
        let found = tau >= fail_from;
        if found {
            trace.push((tau, false, true));
            if tau == 0 {
                return (trace, BaOutcomeKind::FailureFound);
            }
            tau = tau.saturating_sub(cfg.backstep);
            at_tau = 0;
            forced_run = 0;
        } else {
            at_tau += 1;
            let forced = at_tau == cfg.max_epochs_per_step;
            trace.push((tau, forced, false));
            if forced {
                tau = tau.saturating_sub(1);
                at_tau = 0;
                forced_run += 1;
                if forced_run == cfg.reject_after_forced {
                    return (trace, BaOutcomeKind::RejectedSpurious);
                }
            }
        }
    }
}

#[test]
fn schedule_follows_recurrence_until_found() {
    let cfg = BaConfig::default();
    let mut sim = ScriptedSim::new(50, Some(0));
    let demo = fake_demo(&mut sim, 50);
    let mut solver = small_solver(1);
    let out = run_backward(&demo, &mut sim, &mut solver, &cfg, 1_000_000).unwrap();
    let got: Vec<_> = out
        .schedule
        .iter()
        .map(|e| (e.tau, e.forced, e.failure_found))
        .collect();
    let (want, kind) = expected_trace(50, 0, &cfg);
    assert_eq!(got, want);
    assert_eq!(got.first().unwrap().0, 40);
    assert_eq!(out.outcome, kind);
    assert_eq!(out.outcome, BaOutcomeKind::FailureFound);
    let failure = out.failure.unwrap();
    assert_eq!(failure.start_t, 0);
    assert!(failure.ends_in_failure);
}

#[test]
fn schedule_forced_advances_then_rejection() {
    let cfg = BaConfig::default();
    let mut sim = ScriptedSim::new(50, Some(30));
    let demo = fake_demo(&mut sim, 50);
    let mut solver = small_solver(2);
    let out = run_backward(&demo, &mut sim, &mut solver, &cfg, 10_000_000).unwrap();
    let got: Vec<_> = out
        .schedule
        .iter()
        .map(|e| (e.tau, e.forced, e.failure_found))
        .collect();
    let (want, kind) = expected_trace(50, 30, &cfg);
    assert_eq!(got, want);
    assert_eq!(kind, BaOutcomeKind::RejectedSpurious);
    assert_eq!(out.outcome, kind);
    assert_eq!(out.schedule.iter().filter(|e| e.forced).count(), 5);
    for w in out.schedule.windows(2) {
        assert!(w[1].tau <= w[0].tau);
    }
}

#[test]
fn hifi_steps_equal_summed_rollout_lengths() {
    let cfg = BaConfig::default();
    let mut sim = ScriptedSim::new(50, Some(30));
    let demo = fake_demo(&mut sim, 50);
    let before = sim.steps_taken();
    let mut solver = small_solver(3);
    let out = run_backward(&demo, &mut sim, &mut solver, &cfg, 10_000_000).unwrap();
    let summed: u64 = out.schedule.iter().map(|e| e.env_steps).sum();
    assert_eq!(out.hifi_steps_used, summed);
    assert_eq!(sim.steps_taken() - before, summed);
    // Every rollout from tau runs to the horizon, so each epoch's step count
    // is a multiple of the remaining length.
    for e in &out.schedule {
        assert_eq!(e.env_steps % (50 - e.tau) as u64, 0);
    }
}

#[test]
fn never_failing_sim_is_rejected_within_cap() {
    let cfg = BaConfig::default();
    let mut sim = ScriptedSim::new(50, None);
    let demo = fake_demo(&mut sim, 50);
    let mut solver = small_solver(4);
    let out = run_backward(&demo, &mut sim, &mut solver, &cfg, 10_000_000).unwrap();
    assert_eq!(out.outcome, BaOutcomeKind::RejectedSpurious);
    assert_eq!(
        out.schedule.len(),
        cfg.reject_after_forced * cfg.max_epochs_per_step
    );
    assert_eq!(out.schedule.last().unwrap().tau, 36);
}

#[test]
fn budget_exhaustion_is_reported() {
    let mut sim = ScriptedSim::new(50, None);
    let demo = fake_demo(&mut sim, 50);
    let mut solver = small_solver(5);
    let out = run_backward(&demo, &mut sim, &mut solver, &BaConfig::default(), 200).unwrap();
    assert_eq!(out.outcome, BaOutcomeKind::BudgetExhausted);
    assert!(out.hifi_steps_used >= 200);
    assert!(out.failure.is_none());
}

#[test]
fn demo_shorter_than_offset_is_rejected() {
    let mut sim = ScriptedSim::new(50, Some(0));
    let demo = fake_demo(&mut sim, 10);
    let mut solver = small_solver(6);
    assert!(run_backward(&demo, &mut sim, &mut solver, &BaConfig::default(), 1000).is_err());
}

#[test]
fn demo_from_another_config_is_refused_before_training() {
    let mut lofi = CrosswalkSim::new(ScenarioConfig::default(), FidelityConfig::hifi()).unwrap();
    let traj = random_trajectory(&mut lofi, 50, 0.0, 1);
    let demo = adapt_replay(&traj, &mut lofi).unwrap();
    let mut other = CrosswalkSim::new(
        ScenarioConfig {
            car_x0: -50.0,
            ..ScenarioConfig::default()
        },
        FidelityConfig::hifi(),
    )
    .unwrap();
    let mut solver = small_solver(7);
    let before = other.steps_taken();
    let err = run_backward(&demo, &mut other, &mut solver, &BaConfig::default(), 1000).unwrap_err();
    assert!(matches!(err, Error::ConfigMismatch));
    assert_eq!(other.steps_taken(), before);
}

/// Rolls out seeded Gaussian actions (scaled by `scale`) for up to `len` steps.
fn random_trajectory<S: Simulator>(sim: &mut S, len: usize, scale: f64, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sim.reset(0);
    let mut traj = Trajectory::default();
    while traj.len() < len && !sim.is_terminal() {
        let snap = sim.snapshot();
        let action = EnvironmentAction::new(
            (0..sim.action_dim())
                .map(|_| scale * rng.random_range(-1.0..1.0))
                .collect(),
        );
        let outcome = sim.step(&action).unwrap();
        traj.push(TrajectoryStep {
            state_snapshot: snap,
            action,
            reward: outcome.log_likelihood,
            outcome,
        });
    }
    traj
}

fn time_pair() -> (CrosswalkSim, CrosswalkSim) {
    let lofi = CrosswalkSim::new(
        ScenarioConfig::default(),
        FidelityConfig {
            dt: 0.5,
            horizon: 10,
            ..FidelityConfig::hifi()
        },
    )
    .unwrap();
    let hifi = CrosswalkSim::new(ScenarioConfig::default(), FidelityConfig::hifi()).unwrap();
    (lofi, hifi)
}

#[test]
fn repeat_multiplies_length_and_is_deterministic() {
    let (mut lofi, mut hifi) = time_pair();
    for len in [3, 7, 10] {
        let traj = random_trajectory(&mut lofi, len, 1.0, len as u64);
        let a = adapt_repeat(&traj, 5, &mut hifi).unwrap();
        let b = adapt_repeat(&traj, 5, &mut hifi).unwrap();
        if !a.ends_in_failure {
            assert_eq!(a.len(), 5 * traj.len());
        }
        assert_eq!(a, b);
        for (i, step) in a.steps.iter().enumerate() {
            assert_eq!(step.t, i);
            assert_eq!(step.action, traj.steps[i / 5].action);
        }
        a.verify(&mut hifi).unwrap();
    }
}

#[test]
fn repeat_rejects_horizon_mismatch() {
    let (mut lofi, mut hifi) = time_pair();
    let traj = random_trajectory(&mut lofi, 10, 1.0, 1);
    assert!(matches!(
        adapt_repeat(&traj, 4, &mut hifi),
        Err(Error::Adaptation(_))
    ));
}

#[test]
fn repeat_by_one_is_replay() {
    let mut sim = CrosswalkSim::new(ScenarioConfig::default(), FidelityConfig::hifi()).unwrap();
    let traj = random_trajectory(&mut sim, 50, 1.0, 2);
    let a = adapt_repeat(&traj, 1, &mut sim).unwrap();
    let b = adapt_replay(&traj, &mut sim).unwrap();
    assert_eq!(a.steps, b.steps);
}

#[test]
fn replay_in_same_sim_reproduces_states() {
    let mut sim = CrosswalkSim::new(ScenarioConfig::default(), FidelityConfig::hifi()).unwrap();
    let traj = random_trajectory(&mut sim, 50, 1.0, 3);
    let demo = adapt_replay(&traj, &mut sim).unwrap();
    assert_eq!(demo.len(), traj.len());
    for (d, s) in demo.steps.iter().zip(&traj.steps) {
        assert_eq!(d.snapshot, s.state_snapshot);
    }
    assert_eq!(demo.ends_in_failure, traj.ends_in_failure);
}

#[test]
fn quantized_replay_differs_from_lofi_states() {
    let mut lofi = CrosswalkSim::new(
        ScenarioConfig::default(),
        FidelityConfig {
            quantize_decimals: Some(1),
            ..FidelityConfig::hifi()
        },
    )
    .unwrap();
    let mut hifi = CrosswalkSim::new(ScenarioConfig::default(), FidelityConfig::hifi()).unwrap();
    let traj = random_trajectory(&mut lofi, 50, 1.0, 4);
    let demo = adapt_replay(&traj, &mut hifi).unwrap();
    let lofi_state = lofi.decode(&traj.steps[20].state_snapshot).unwrap();
    let hifi_state = hifi.decode(&demo.steps[20].snapshot).unwrap();
    assert_ne!(lofi_state.vehicle, hifi_state.vehicle);
}

#[test]
fn failure_flag_is_recomputed_in_hifi() {
    // Hand-made lofi trajectory claiming a failure that the hifi replay of
    // zero actions cannot reproduce.
    let mut sim = CrosswalkSim::new(ScenarioConfig::default(), FidelityConfig::hifi()).unwrap();
    let mut traj = random_trajectory(&mut sim, 50, 0.0, 5);
    traj.steps.last_mut().unwrap().outcome.event = true;
    traj.ends_in_failure = true;
    let demo = adapt_replay(&traj, &mut sim).unwrap();
    assert!(!demo.ends_in_failure);
}

#[test]
fn replay_rejects_dimension_mismatch() {
    let mut lofi = CrosswalkSim::new(ScenarioConfig::perception(), FidelityConfig::hifi()).unwrap();
    let mut hifi = CrosswalkSim::new(
        ScenarioConfig::perception(),
        FidelityConfig {
            sensor_model: SensorModel::Lidar,
            ..FidelityConfig::hifi()
        },
    )
    .unwrap();
    let traj = random_trajectory(&mut lofi, 50, 1.0, 6);
    match adapt_replay(&traj, &mut hifi) {
        Err(Error::Adaptation(msg)) => assert!(msg.contains("remap"), "{msg}"),
        other => panic!("expected adaptation error, got {other:?}"),
    }
    let demo = adapt_remap(&traj, &[Some(0), Some(1), None], 0.0, &mut hifi).unwrap();
    for (d, s) in demo.steps.iter().zip(&traj.steps) {
        assert_eq!(
            d.action.values(),
            &[s.action.values()[0], s.action.values()[1], 0.0]
        );
    }
    assert!(adapt_remap(&traj, &[Some(0), Some(6), None], 0.0, &mut hifi).is_err());
}

#[test]
fn identity_remap_equals_replay() {
    let mut sim = CrosswalkSim::new(ScenarioConfig::default(), FidelityConfig::hifi()).unwrap();
    let traj = random_trajectory(&mut sim, 50, 1.0, 7);
    let map: Vec<Option<usize>> = (0..6).map(Some).collect();
    assert_eq!(
        adapt_remap(&traj, &map, 0.0, &mut sim).unwrap().steps,
        adapt_replay(&traj, &mut sim).unwrap().steps
    );
}

#[test]
fn all_fill_remap_is_nominal_rollout() {
    let mut sim = CrosswalkSim::new(ScenarioConfig::default(), FidelityConfig::hifi()).unwrap();
    let traj = random_trajectory(&mut sim, 50, 1.0, 8);
    let nominal = random_trajectory(&mut sim, 50, 0.0, 8);
    let demo = adapt_remap(&traj, &[None; 6], 0.0, &mut sim).unwrap();
    for (d, s) in demo.steps.iter().zip(&nominal.steps) {
        assert_eq!(d.snapshot, s.state_snapshot);
    }
}

#[test]
fn demo_file_round_trip() {
    let mut sim = CrosswalkSim::new(ScenarioConfig::default(), FidelityConfig::hifi()).unwrap();
    let traj = random_trajectory(&mut sim, 50, 1.0, 9);
    let demo = adapt_replay(&traj, &mut sim).unwrap();
    let mut buf = Vec::new();
    demo.write_jsonl(&mut buf).unwrap();
    let first: serde_json::Value =
        serde_json::from_str(std::str::from_utf8(&buf).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(first["t"], 0);
    assert!(first["snapshot"].is_string());
    assert!(first["action"].is_array());
    let back = ExpertDemonstration::read_jsonl(buf.as_slice(), &mut sim).unwrap();
    assert_eq!(back.steps, demo.steps);
    assert_eq!(back.ends_in_failure, demo.ends_in_failure);
}

#[test]
fn tampered_demo_fails_verification() {
    let mut sim = CrosswalkSim::new(ScenarioConfig::default(), FidelityConfig::hifi()).unwrap();
    let traj = random_trajectory(&mut sim, 50, 1.0, 10);
    let mut demo = adapt_replay(&traj, &mut sim).unwrap();
    demo.steps[5].action = EnvironmentAction::new(vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert!(matches!(demo.verify(&mut sim), Err(Error::Adaptation(_))));
}

#[test]
fn warm_start_checkpoint_round_trip_is_byte_identical() {
    let shape = PolicyShape {
        obs_dim: 11,
        hidden: 8,
        action_dim: 6,
    };
    let params = PolicyParams::init(shape, &mut ChaCha8Rng::seed_from_u64(11));
    let ckpt = Checkpoint::from_params(&params, serde_json::json!({"case": "time"}));
    let text = ckpt.to_json().unwrap();
    let loaded = warm_start(&Checkpoint::from_json(&text).unwrap(), shape).unwrap();
    let again = Checkpoint::from_params(&loaded, serde_json::json!({"case": "time"}));
    assert_eq!(again.to_json().unwrap(), text);
}

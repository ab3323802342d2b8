mod common;

use common::ScriptedSim;
use mfast_core::ast::{rollout_rng, RewardConfig, Simulator};
use mfast_core::policy::{PolicyParams, PolicyShape};
use mfast_core::ppo::{
    compute_gae, kl_diag_gaussian, normalize, rollout, run_until_failure, DrlSolver, EpisodeData,
    EpochStop, PpoConfig, StartDistribution,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_force_gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    let n = rewards.len();
    let delta: Vec<f64> = (0..n)
        .map(|t| rewards[t] + gamma * values.get(t + 1).copied().unwrap_or(0.0) - values[t])
        .collect();
    (0..n)
        .map(|t| {
            (t..n)
                .map(|k| (gamma * lambda).powi((k - t) as i32) * delta[k])
                .sum()
        })
        .collect()
}

#[test]
fn gae_matches_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let rewards: Vec<f64> = (0..20).map(|_| rng.random_range(-10.0..10.0)).collect();
        let values: Vec<f64> = (0..20).map(|_| rng.random_range(-10.0..10.0)).collect();
        let gamma = rng.random_range(0.5..=1.0);
        let lambda = rng.random_range(0.0..=1.0);
        let (adv, ret) = compute_gae(&rewards, &values, 0.0, gamma, lambda);
        let want = brute_force_gae(&rewards, &values, gamma, lambda);
        for t in 0..20 {
            assert!(
                (adv[t] - want[t]).abs() < 1e-10,
                "t={t}: {} vs {}",
                adv[t],
                want[t]
            );
            assert!((ret[t] - (adv[t] + values[t])).abs() < 1e-12);
        }
    }
}

fn scripted_solver(cfg: PpoConfig, seed: u64) -> DrlSolver {
    let shape = PolicyShape {
        obs_dim: 2,
        hidden: cfg.hidden,
        action_dim: 1,
    };
    DrlSolver::new(
        PolicyParams::init(shape, &mut ChaCha8Rng::seed_from_u64(seed)),
        cfg,
        seed,
    )
}

fn small_cfg() -> PpoConfig {
    PpoConfig {
        batch_size: 100,
        hidden: 4,
        minibatches: 1,
        reward_scale: 1.0,
        ..PpoConfig::default()
    }
}

fn collect(solver: &DrlSolver, n: usize) -> Vec<EpisodeData> {
    let mut sim = ScriptedSim::new(10, None);
    (0..n)
        .map(|i| {
            sim.reset(0);
            rollout(
                &mut sim,
                &solver.params,
                &mut rollout_rng(7, i as u64),
                &RewardConfig::default(),
                1e-4,
            )
            .unwrap()
            .0
        })
        .collect()
}

#[test]
fn kl_early_stop_keeps_last_accepted_update() {
    let cfg = PpoConfig {
        learning_rate: 0.05,
        kl_limit: 1e-12,
        ..small_cfg()
    };
    let mut stopped = scripted_solver(cfg.clone(), 1);
    let mut one_step = scripted_solver(
        PpoConfig {
            update_epochs: 1,
            kl_limit: f64::INFINITY,
            ..cfg
        },
        1,
    );
    let mut eps = collect(&stopped, 8);
    let mut eps2 = eps.clone();
    let stats = stopped.update(&mut eps).unwrap();
    let reference = one_step.update(&mut eps2).unwrap();
    assert!(stats.kl_stopped);
    assert_eq!(stats.updates, 1);
    assert_eq!(reference.updates, 1);
    assert_eq!(stopped.params, one_step.params);
}

#[test]
fn update_without_trigger_runs_all_epochs() {
    let mut solver = scripted_solver(small_cfg(), 2);
    let mut eps = collect(&solver, 8);
    let before = solver.params.clone();
    let stats = solver.update(&mut eps).unwrap();
    assert!(!stats.kl_stopped);
    assert_eq!(stats.updates, 10);
    assert_ne!(solver.params, before);
    assert!(stats.mean_kl >= 0.0 && stats.mean_kl <= 1.0);

    let cfg = PpoConfig {
        minibatches: 4,
        ..small_cfg()
    };
    let mut solver = scripted_solver(cfg, 2);
    let mut eps = collect(&solver, 8);
    assert_eq!(solver.update(&mut eps).unwrap().updates, 40);
}

#[test]
fn always_failing_sim_finds_failure_in_first_epoch() {
    let mut sim = ScriptedSim::new(1, Some(0));
    let mut solver = scripted_solver(small_cfg(), 3);
    let before = sim.steps_taken();
    let report = solver
        .train_epoch(&mut sim, &StartDistribution::Reset, EpochStop::FullBatch)
        .unwrap();
    assert!(report.failure_found);
    assert_eq!(report.steps_to_first_failure, Some(1));
    assert_eq!(report.env_steps, sim.steps_taken() - before);
    assert!(report.env_steps <= 100);
    let best = report.best_failure.unwrap();
    assert!(best.ends_in_failure);
    assert_eq!(best.total_return, report.best_return);
}

#[test]
fn first_failure_stop_ends_epoch_early() {
    let mut sim = ScriptedSim::new(10, Some(0));
    let mut solver = scripted_solver(small_cfg(), 4);
    let report = solver
        .train_epoch(&mut sim, &StartDistribution::Reset, EpochStop::FirstFailure)
        .unwrap();
    assert_eq!(report.episodes, 1);
    assert_eq!(report.env_steps, 10);
}

#[test]
fn epoch_step_accounting_matches_simulator() {
    let mut sim = ScriptedSim::new(7, None);
    let mut solver = scripted_solver(small_cfg(), 5);
    let mut cum = 0;
    for _ in 0..3 {
        let before = sim.steps_taken();
        let r = solver
            .train_epoch(&mut sim, &StartDistribution::Reset, EpochStop::FullBatch)
            .unwrap();
        assert_eq!(r.env_steps, sim.steps_taken() - before);
        assert!(r.env_steps >= 100 && r.env_steps < 107);
        assert!(!r.failure_found);
        cum += r.env_steps;
    }
    assert_eq!(cum, sim.steps_taken());
}

#[test]
fn snapshot_start_distribution_cycles() {
    let mut sim = ScriptedSim::new(10, Some(8));
    let snaps: Vec<_> = [2u64, 8]
        .iter()
        .map(|t| mfast_core::ast::Snapshot(t.to_le_bytes().to_vec()))
        .collect();
    let mut solver = scripted_solver(small_cfg(), 6);
    let r = solver
        .train_epoch(
            &mut sim,
            &StartDistribution::Snapshots(snaps),
            EpochStop::FullBatch,
        )
        .unwrap();
    // Episodes alternate between 8 steps (never fail) and 2 steps (fail).
    assert!(r.failure_found);
    assert_eq!(r.steps_to_first_failure, Some(10));
    assert_eq!(r.env_steps % 10, 0);
}

#[test]
fn seeded_training_is_reproducible() {
    let run = || {
        let mut sim = ScriptedSim::new(10, Some(100));
        let mut solver = scripted_solver(small_cfg(), 9);
        let out = run_until_failure(&mut solver, &mut sim, &StartDistribution::Reset, 500).unwrap();
        (solver.params.clone(), out.metrics)
    };
    let (p1, m1) = run();
    let (p2, m2) = run();
    assert_eq!(p1, p2);
    assert_eq!(
        serde_json::to_string(&m1).unwrap(),
        serde_json::to_string(&m2).unwrap()
    );
    assert_eq!(m1.len(), 5);
}

proptest! {
    #[test]
    fn normalization_moments(values in prop::collection::vec(-1e3f64..1e3, 2..200)) {
        let mut v = values.clone();
        normalize(&mut v);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        prop_assert!(mean.abs() < 1e-9);
        let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - values.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread > 1e-3 {
            prop_assert!((var.sqrt() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn kl_is_nonnegative(
        m1 in prop::collection::vec(-5.0f64..5.0, 3),
        m2 in prop::collection::vec(-5.0f64..5.0, 3),
        s1 in prop::collection::vec(0.05f64..5.0, 3),
        s2 in prop::collection::vec(0.05f64..5.0, 3),
    ) {
        prop_assert!(kl_diag_gaussian(&m1, &s1, &m2, &s2) >= -1e-12);
        prop_assert!(kl_diag_gaussian(&m1, &s1, &m1, &s1).abs() < 1e-12);
    }

    #[test]
    fn clipped_objective_is_bounded(log_ratio in -5.0f64..5.0, adv in -10.0f64..10.0, eps in 0.01f64..0.5) {
        let ratio = log_ratio.exp();
        let obj = (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv);
        prop_assert!(obj <= (1.0 + eps) * adv.abs() + 1e-12);
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{ExperimentConfig, SimSetup};
use super::report::{MethodResult, RunReport, SeedReport};
use crate::ast::{derive_seed, Simulator, Trajectory};
use crate::backward::{
    adapt, run_backward, warm_start, warm_start_reinit_std, BaOutcomeKind, DemoSource,
    ExpertDemonstration, WarmStartError,
};
use crate::error::Result;
use crate::policy::{Checkpoint, PolicyParams, PolicyShape};
use crate::ppo::{run_until_failure, DrlOutcome, DrlSolver, StartDistribution};

const LOFI_INIT: u64 = 1;
const LOFI_ROLLOUTS: u64 = 2;
const HIFI_INIT: u64 = 3;
const HIFI_ROLLOUTS: u64 = 4;
const REINIT_STD: u64 = 5;

/// Tags a serializable record with its seed and pipeline stage.
pub fn metric_line<T: Serialize>(seed: u64, stage: &str, record: &T) -> Value {
    let mut v = serde_json::to_value(record).unwrap_or(Value::Null);
    if let Value::Object(map) = &mut v {
        map.insert("seed".into(), seed.into());
        map.insert("stage".into(), stage.into());
    }
    v
}

fn policy_shape<S: Simulator + ?Sized>(sim: &S, hidden: usize) -> PolicyShape {
    PolicyShape {
        obs_dim: sim.observation_dim(),
        hidden,
        action_dim: sim.action_dim(),
    }
}

fn fresh_params(shape: PolicyShape, seed: u64, label: u64) -> PolicyParams {
    PolicyParams::init(
        shape,
        &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, label)),
    )
}

/// Result of a DRL search together with the trained policy.
#[derive(Debug, Clone)]
pub struct DrlRun {
    pub outcome: DrlOutcome,
    pub checkpoint: Checkpoint,
}

impl DrlRun {
    pub fn method_result(&self) -> MethodResult {
        MethodResult {
            outcome: if self.outcome.steps_to_failure.is_some() {
                BaOutcomeKind::FailureFound
            } else {
                BaOutcomeKind::BudgetExhausted
            },
            steps_to_failure: self.outcome.steps_to_failure,
            steps_used: self.outcome.steps_used,
            final_reward: self.outcome.failure.as_ref().map(|f| f.total_return),
            replay_steps: 0,
            epochs: self.outcome.epochs,
        }
    }
}

/// Plain DRL from the initial state of `setup` until failure or `budget`.
pub fn run_drl(
    cfg: &ExperimentConfig,
    setup: &SimSetup,
    seed: u64,
    budget: u64,
    labels: (u64, u64),
) -> Result<DrlRun> {
    let mut sim = setup.build()?;
    let params = fresh_params(policy_shape(&sim, cfg.solver.hidden), seed, labels.0);
    let mut solver = DrlSolver::new(params, cfg.solver.clone(), derive_seed(seed, labels.1));
    let outcome = run_until_failure(&mut solver, &mut sim, &StartDistribution::Reset, budget)?;
    let checkpoint = Checkpoint::from_params(&solver.params, serde_json::to_value(setup)?);
    Ok(DrlRun {
        outcome,
        checkpoint,
    })
}

/// DRL in the low-fidelity simulator.
pub fn run_lofi(cfg: &ExperimentConfig, seed: u64) -> Result<DrlRun> {
    run_drl(
        cfg,
        &cfg.lofi,
        seed,
        cfg.budgets.lofi_steps,
        (LOFI_INIT, LOFI_ROLLOUTS),
    )
}

/// DRL directly in the high-fidelity simulator.
pub fn run_hifi_baseline(cfg: &ExperimentConfig, seed: u64) -> Result<DrlRun> {
    run_drl(
        cfg,
        &cfg.hifi,
        seed,
        cfg.budgets.hifi_steps,
        (HIFI_INIT, HIFI_ROLLOUTS),
    )
}

/// Adapts a lofi failure into a hifi demonstration.
pub fn make_demo(
    cfg: &ExperimentConfig,
    lofi_failure: &Trajectory,
    lofi_steps: u64,
) -> Result<ExpertDemonstration> {
    let mut hifi = cfg.hifi.build()?;
    let source = DemoSource {
        lofi_config: serde_json::to_value(&cfg.lofi)?,
        lofi_steps,
        ..DemoSource::default()
    };
    adapt(
        lofi_failure,
        cfg.lofi.fidelity.action_dim(),
        cfg.lofi.fidelity.horizon,
        &cfg.adaptation,
        &mut hifi,
        source,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaRun {
    pub result: MethodResult,
    pub metrics: Vec<Value>,
}

/// How the backward-algorithm policy is initialized.
#[derive(Debug, Clone, Copy)]
pub enum BaInit<'a> {
    Scratch,
    Warm(&'a Checkpoint),
}

/// Runs the backward algorithm in hifi along `demo`. Returns the
/// incompatibility report instead when a warm start does not fit.
pub fn run_ba(
    cfg: &ExperimentConfig,
    seed: u64,
    demo: &ExpertDemonstration,
    init: BaInit,
    stage: &str,
) -> Result<std::result::Result<BaRun, WarmStartError>> {
    let mut sim = cfg.hifi.build()?;
    let shape = policy_shape(&sim, cfg.solver.hidden);
    let params = match init {
        BaInit::Scratch => fresh_params(shape, seed, HIFI_INIT),
        BaInit::Warm(ckpt) => {
            let loaded = if cfg.ba.reinit_log_std {
                warm_start_reinit_std(
                    ckpt,
                    shape,
                    &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, REINIT_STD)),
                )
            } else {
                warm_start(ckpt, shape)
            };
            match loaded {
                Ok(p) => p,
                Err(WarmStartError::Checkpoint(e)) => return Err(e),
                Err(e) => return Ok(Err(e)),
            }
        }
    };
    let mut solver = DrlSolver::new(params, cfg.solver.clone(), derive_seed(seed, HIFI_ROLLOUTS));
    let budget = cfg
        .budgets
        .hifi_steps
        .saturating_sub(demo.source.replay_steps);
    let out = run_backward(demo, &mut sim, &mut solver, &cfg.ba, budget)?;
    let replay = demo.source.replay_steps;
    let mut metrics: Vec<Value> = out
        .metrics
        .iter()
        .map(|m| metric_line(seed, stage, m))
        .collect();
    metrics.extend(out.schedule.iter().map(|s| {
        let mut v = metric_line(seed, stage, s);
        v["kind"] = "schedule".into();
        v
    }));
    Ok(Ok(BaRun {
        result: MethodResult {
            outcome: out.outcome,
            steps_to_failure: out.steps_to_failure.map(|s| s + replay),
            steps_used: out.hifi_steps_used + replay,
            final_reward: out.failure.as_ref().map(|f| f.total_return),
            replay_steps: replay,
            epochs: out.schedule.len(),
        },
        metrics,
    }))
}

/// The full pipeline for one seed: lofi search, adaptation, backward
/// algorithm from scratch and warm-started, and the hifi DRL baseline.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<(SeedReport, Vec<Value>)> {
    let mut metrics = Vec::new();
    let lofi = run_lofi(cfg, seed)?;
    metrics.extend(
        lofi.outcome
            .metrics
            .iter()
            .map(|m| metric_line(seed, "lofi_drl", m)),
    );
    let mut report = SeedReport {
        seed,
        lofi: lofi.method_result(),
        demo_length: None,
        demo_ends_in_failure: None,
        drl_baseline: None,
        ba_scratch: None,
        ba_warm: None,
        warm_start_note: None,
    };

    if let Some(failure) = &lofi.outcome.failure {
        let demo = make_demo(cfg, failure, lofi.outcome.steps_to_failure.unwrap_or(0))?;
        report.demo_length = Some(demo.len());
        report.demo_ends_in_failure = Some(demo.ends_in_failure);
        if demo.len() > cfg.ba.start_offset {
            let scratch = run_ba(cfg, seed, &demo, BaInit::Scratch, "ba_scratch")?
                .expect("scratch initialization always fits");
            metrics.extend(scratch.metrics);
            report.ba_scratch = Some(scratch.result);
            if cfg.warm_start {
                match run_ba(cfg, seed, &demo, BaInit::Warm(&lofi.checkpoint), "ba_warm")? {
                    Ok(warm) => {
                        metrics.extend(warm.metrics);
                        report.ba_warm = Some(warm.result);
                    }
                    Err(e) => report.warm_start_note = Some(e.to_string()),
                }
            } else {
                report.warm_start_note = Some("warm start disabled".into());
            }
        } else {
            report.warm_start_note = Some(format!(
                "demonstration of {} steps is too short for start_offset {}",
                demo.len(),
                cfg.ba.start_offset
            ));
        }
    } else {
        report.warm_start_note = Some("no lofi failure within budget".into());
    }

    let baseline = run_hifi_baseline(cfg, seed)?;
    metrics.extend(
        baseline
            .outcome
            .metrics
            .iter()
            .map(|m| metric_line(seed, "drl_baseline", m)),
    );
    report.drl_baseline = Some(baseline.method_result());
    Ok((report, metrics))
}

/// Runs every seed of `cfg` and assembles the report.
pub fn run_case_study(cfg: &ExperimentConfig) -> Result<(RunReport, Vec<Value>)> {
    cfg.validate()?;
    let mut seeds = Vec::new();
    let mut metrics = Vec::new();
    for &seed in &cfg.seeds {
        let (r, m) = run_seed(cfg, seed)?;
        seeds.push(r);
        metrics.extend(m);
    }
    Ok((RunReport::from_seeds(cfg, seeds), metrics))
}

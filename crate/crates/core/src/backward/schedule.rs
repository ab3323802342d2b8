use serde::{Deserialize, Serialize};

use super::demo::ExpertDemonstration;
use crate::ast::{Simulator, Trajectory};
use crate::error::{Error, Result};
use crate::ppo::{DrlSolver, EpochMetrics, EpochStop, StartDistribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaConfig {
    /// First restart point, counted back from the end of the demonstration.
    pub start_offset: usize,
    /// Pointer move after an epoch that found a failure.
    pub backstep: usize,
    /// Epochs allowed at one restart point before a forced advance.
    pub max_epochs_per_step: usize,
    /// Consecutive forced advances that reject the demonstration.
    pub reject_after_forced: usize,
    /// Also restart from this many neighbors on each side of the pointer.
    pub restart_jitter: usize,
    /// End an epoch at its first failing rollout while the pointer is above
    /// zero. The final stage always collects a full batch.
    pub stop_epoch_on_failure: bool,
    /// Re-draw the log-std head after a warm start.
    pub reinit_log_std: bool,
}

impl Default for BaConfig {
    fn default() -> Self {
        Self {
            start_offset: 10,
            backstep: 4,
            max_epochs_per_step: 10,
            reject_after_forced: 5,
            restart_jitter: 0,
            stop_epoch_on_failure: true,
            reinit_log_std: false,
        }
    }
}

impl BaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.start_offset == 0
            || self.backstep == 0
            || self.reject_after_forced == 0
            || self.max_epochs_per_step == 0
        {
            return Err(Error::InvalidConfig(
                "start_offset, backstep, max_epochs_per_step and reject_after_forced must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaStatus {
    Running,
    FoundFromStart,
    RejectedSpurious,
}

/// Restart pointer and counters of the backward algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaSchedule {
    pub tau: usize,
    pub epochs_at_tau: usize,
    pub consecutive_forced: usize,
    pub status: BaStatus,
    backstep: usize,
    max_epochs_per_step: usize,
    reject_after_forced: usize,
}

impl BaSchedule {
    pub fn new(demo_len: usize, cfg: &BaConfig) -> Result<Self> {
        cfg.validate()?;
        if demo_len < cfg.start_offset + 1 {
            return Err(Error::InvalidConfig(format!(
                "demonstration of {demo_len} steps is shorter than start_offset + 1 = {}",
                cfg.start_offset + 1
            )));
        }
        Ok(Self {
            tau: demo_len - cfg.start_offset,
            epochs_at_tau: 0,
            consecutive_forced: 0,
            status: BaStatus::Running,
            backstep: cfg.backstep,
            max_epochs_per_step: cfg.max_epochs_per_step,
            reject_after_forced: cfg.reject_after_forced,
        })
    }

    /// Records an epoch at the current pointer. Returns whether it forced an
    /// advance.
    pub fn record_epoch(&mut self, failure_found: bool) -> bool {
        if self.status != BaStatus::Running {
            return false;
        }
        if failure_found {
            if self.tau == 0 {
                self.status = BaStatus::FoundFromStart;
            } else {
                self.tau = self.tau.saturating_sub(self.backstep);
            }
            self.epochs_at_tau = 0;
            self.consecutive_forced = 0;
            return false;
        }
        self.epochs_at_tau += 1;
        if self.epochs_at_tau < self.max_epochs_per_step {
            return false;
        }
        self.tau = self.tau.saturating_sub(1);
        self.epochs_at_tau = 0;
        self.consecutive_forced += 1;
        if self.consecutive_forced >= self.reject_after_forced {
            self.status = BaStatus::RejectedSpurious;
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaOutcomeKind {
    FailureFound,
    RejectedSpurious,
    BudgetExhausted,
}

/// One epoch of the schedule trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub epoch: usize,
    pub tau: usize,
    pub forced: bool,
    pub failure_found: bool,
    pub env_steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaOutcome {
    pub outcome: BaOutcomeKind,
    /// Hifi steps through the end of the first failing rollout from the
    /// start state, excluding the adaptation replay.
    pub steps_to_failure: Option<u64>,
    pub hifi_steps_used: u64,
    /// Best failure of the final epoch, running from the initial state.
    pub failure: Option<Trajectory>,
    pub schedule: Vec<ScheduleEntry>,
    pub metrics: Vec<EpochMetrics>,
}

/// Trains `solver` from restart points moving back along `demo` until a
/// failure is found from the initial state, the demonstration is rejected,
/// or `max_steps` hifi steps are spent.
pub fn run_backward<S: Simulator + ?Sized>(
    demo: &ExpertDemonstration,
    sim: &mut S,
    solver: &mut DrlSolver,
    cfg: &BaConfig,
    max_steps: u64,
) -> Result<BaOutcome> {
    let mut schedule = BaSchedule::new(demo.len(), cfg)?;
    for step in &demo.steps {
        sim.restore(&step.snapshot)?;
    }
    let base = sim.steps_taken();
    let mut trace = Vec::new();
    let mut metrics = Vec::new();
    let finish = |kind, steps_to_failure, failure, trace, metrics, used| BaOutcome {
        outcome: kind,
        steps_to_failure,
        hifi_steps_used: used,
        failure,
        schedule: trace,
        metrics,
    };
    loop {
        let used = sim.steps_taken() - base;
        if used >= max_steps {
            return Ok(finish(
                BaOutcomeKind::BudgetExhausted,
                None,
                None,
                trace,
                metrics,
                used,
            ));
        }
        let tau = schedule.tau;
        let lo = tau.saturating_sub(cfg.restart_jitter);
        let hi = (tau + cfg.restart_jitter).min(demo.len() - 1);
        let mut starts = vec![demo.steps[tau].snapshot.clone()];
        starts.extend(
            (lo..=hi)
                .filter(|&i| i != tau)
                .map(|i| demo.steps[i].snapshot.clone()),
        );
        let stop = if tau > 0 && cfg.stop_epoch_on_failure {
            EpochStop::FirstFailure
        } else {
            EpochStop::FullBatch
        };
        let report = solver.train_epoch(sim, &StartDistribution::Snapshots(starts), stop)?;
        metrics.push(report.metrics(sim.steps_taken() - base));
        let forced = schedule.record_epoch(report.failure_found);
        trace.push(ScheduleEntry {
            epoch: report.epoch,
            tau,
            forced,
            failure_found: report.failure_found,
            env_steps: report.env_steps,
        });
        match schedule.status {
            BaStatus::FoundFromStart => {
                let k = report
                    .steps_to_first_failure
                    .expect("failing epoch has a first failure");
                let used_now = sim.steps_taken() - base;
                return Ok(finish(
                    BaOutcomeKind::FailureFound,
                    Some(used + k),
                    report.best_failure,
                    trace,
                    metrics,
                    used_now,
                ));
            }
            BaStatus::RejectedSpurious => {
                let used_now = sim.steps_taken() - base;
                return Ok(finish(
                    BaOutcomeKind::RejectedSpurious,
                    None,
                    None,
                    trace,
                    metrics,
                    used_now,
                ));
            }
            BaStatus::Running => {}
        }
    }
}

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::backward::BaOutcomeKind;

/// Steps and reward of one search method on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub outcome: BaOutcomeKind,
    /// Simulator steps through the end of the first failing rollout.
    pub steps_to_failure: Option<u64>,
    pub steps_used: u64,
    /// Return of the best failure in the epoch that found the first one.
    pub final_reward: Option<f64>,
    /// Hifi steps spent replaying the adapted demonstration (included in
    /// the step counts above).
    pub replay_steps: u64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub lofi: MethodResult,
    pub demo_length: Option<usize>,
    pub demo_ends_in_failure: Option<bool>,
    pub drl_baseline: Option<MethodResult>,
    pub ba_scratch: Option<MethodResult>,
    pub ba_warm: Option<MethodResult>,
    pub warm_start_note: Option<String>,
}

/// One table row: medians over the seeds on which the method found a failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub steps_to_failure: Option<f64>,
    pub final_reward: Option<f64>,
    pub load_lofi_policy: bool,
    pub lofi_steps: Option<f64>,
    pub percent_of_hifi_steps: Option<f64>,
    pub completed_seeds: usize,
    pub total_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmittedRow {
    pub algorithm: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub seeds: Vec<SeedReport>,
    pub rows: Vec<SummaryRow>,
    pub omitted: Vec<OmittedRow>,
}

/// Median of the values; the mean of the middle two for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn summarize(
    algorithm: &str,
    seeds: &[SeedReport],
    pick: impl Fn(&SeedReport) -> Option<&MethodResult>,
    load_lofi_policy: bool,
    uses_lofi: bool,
    baseline: Option<f64>,
) -> SummaryRow {
    let done: Vec<&SeedReport> = seeds
        .iter()
        .filter(|s| pick(s).and_then(|m| m.steps_to_failure).is_some())
        .collect();
    let steps: Vec<f64> = done
        .iter()
        .filter_map(|s| pick(s)?.steps_to_failure)
        .map(|v| v as f64)
        .collect();
    let rewards: Vec<f64> = done.iter().filter_map(|s| pick(s)?.final_reward).collect();
    let lofi: Vec<f64> = done
        .iter()
        .filter_map(|s| s.lofi.steps_to_failure)
        .map(|v| v as f64)
        .collect();
    let steps_median = median(&steps);
    SummaryRow {
        algorithm: algorithm.into(),
        steps_to_failure: steps_median,
        final_reward: median(&rewards),
        load_lofi_policy,
        lofi_steps: if uses_lofi { median(&lofi) } else { None },
        percent_of_hifi_steps: match (steps_median, baseline) {
            (Some(s), Some(b)) if uses_lofi && b > 0.0 => Some(100.0 * s / b),
            _ => None,
        },
        completed_seeds: done.len(),
        total_seeds: seeds.len(),
    }
}

impl RunReport {
    pub fn from_seeds(cfg: &ExperimentConfig, seeds: Vec<SeedReport>) -> Self {
        Self::assemble(&cfg.name, seeds)
    }

    pub fn assemble(name: &str, mut seeds: Vec<SeedReport>) -> Self {
        seeds.sort_by_key(|s| s.seed);
        let mut rows = Vec::new();
        let mut omitted = Vec::new();
        if !seeds.is_empty() {
            let base = summarize(
                "DRL",
                &seeds,
                |s| s.drl_baseline.as_ref(),
                false,
                false,
                None,
            );
            let b = base.steps_to_failure;
            rows.push(base);
            rows.push(summarize(
                "BA",
                &seeds,
                |s| s.ba_scratch.as_ref(),
                false,
                true,
                b,
            ));
            if seeds.iter().any(|s| s.ba_warm.is_some()) {
                rows.push(summarize(
                    "BA",
                    &seeds,
                    |s| s.ba_warm.as_ref(),
                    true,
                    true,
                    b,
                ));
            } else {
                let reason = seeds
                    .iter()
                    .find_map(|s| s.warm_start_note.clone())
                    .unwrap_or_else(|| "not run".into());
                omitted.push(OmittedRow {
                    algorithm: "BA (lofi policy)".into(),
                    reason,
                });
            }
        }
        Self {
            name: name.into(),
            seeds,
            rows,
            omitted,
        }
    }

    /// Plain-text table of the summary rows.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let ids: Vec<String> = self.seeds.iter().map(|s| s.seed.to_string()).collect();
        let _ = writeln!(out, "Case study: {}", self.name);
        let _ = writeln!(
            out,
            "Medians over {} seed(s) [{}]; each median uses only the seeds on which that method found a failure.",
            self.seeds.len(),
            ids.join(", ")
        );
        let header = [
            "Algorithm",
            "Steps to Failure",
            "Final Reward",
            "Load Lofi Policy?",
            "Lofi Steps",
            "Percent of Hifi Steps",
            "Seeds",
        ];
        let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        let num =
            |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |v| format!("{v:.digits$}"));
        for r in &self.rows {
            table.push(vec![
                r.algorithm.clone(),
                num(r.steps_to_failure, 0),
                num(r.final_reward, 3),
                if r.load_lofi_policy { "Yes" } else { "No" }.into(),
                num(r.lofi_steps, 0),
                r.percent_of_hifi_steps
                    .map_or("-".into(), |p| format!("{p:.3}%")),
                format!("{}/{}", r.completed_seeds, r.total_seeds),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| table.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        for (i, row) in table.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
            if i == 0 {
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                let _ = writeln!(out, "{}", rule.join("-+-"));
            }
        }
        for o in &self.omitted {
            let _ = writeln!(out, "{} row omitted: {}", o.algorithm, o.reason);
        }
        out
    }
}

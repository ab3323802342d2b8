use serde::{Deserialize, Serialize};

use super::demo::{DemoSource, ExpertDemonstration};
use crate::ast::{EnvironmentAction, Simulator, Trajectory};
use crate::error::{Error, Result};

/// How lofi actions become hifi actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Adaptation {
    /// Each lofi action is applied `k` consecutive hifi steps.
    Repeat { k: usize },
    /// Actions are used verbatim.
    Replay,
    /// Hifi channel `j` takes lofi channel `map[j]`, or `fill` when `None`.
    Remap { map: Vec<Option<usize>>, fill: f64 },
}

impl Adaptation {
    pub fn name(&self) -> String {
        match self {
            Adaptation::Repeat { k } => format!("repeat({k})"),
            Adaptation::Replay => "replay".into(),
            Adaptation::Remap { .. } => "remap".into(),
        }
    }

    /// Checks that lofi and hifi simulators fit this adaptation.
    pub fn check(
        &self,
        lofi_action_dim: usize,
        lofi_horizon: usize,
        hifi_action_dim: usize,
        hifi_horizon: usize,
    ) -> Result<()> {
        match self {
            Adaptation::Repeat { k } => {
                if *k == 0 || hifi_horizon != k * lofi_horizon {
                    return Err(Error::Adaptation(format!(
                        "repeat factor {k} does not map lofi horizon {lofi_horizon} onto hifi horizon {hifi_horizon}"
                    )));
                }
                check_same_dim(lofi_action_dim, hifi_action_dim)
            }
            Adaptation::Replay => {
                if hifi_horizon != lofi_horizon {
                    return Err(Error::Adaptation(format!(
                        "replay needs equal horizons, got lofi {lofi_horizon} and hifi {hifi_horizon}"
                    )));
                }
                check_same_dim(lofi_action_dim, hifi_action_dim)
            }
            Adaptation::Remap { map, .. } => {
                if map.len() != hifi_action_dim {
                    return Err(Error::Adaptation(format!(
                        "channel map has {} entries for a {hifi_action_dim}-dimensional hifi action",
                        map.len()
                    )));
                }
                if let Some(c) = map.iter().flatten().find(|&&c| c >= lofi_action_dim) {
                    return Err(Error::Adaptation(format!(
                        "channel map references lofi channel {c} of {lofi_action_dim}"
                    )));
                }
                if hifi_horizon != lofi_horizon {
                    return Err(Error::Adaptation(format!(
                        "remap needs equal horizons, got lofi {lofi_horizon} and hifi {hifi_horizon}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// The hifi action sequence for a lofi action sequence.
    pub fn map_actions<'a, I>(&self, lofi: I) -> Vec<EnvironmentAction>
    where
        I: IntoIterator<Item = &'a EnvironmentAction>,
    {
        let lofi = lofi.into_iter();
        match self {
            Adaptation::Repeat { k } => lofi
                .flat_map(|a| std::iter::repeat_n(a.clone(), *k))
                .collect(),
            Adaptation::Replay => lofi.cloned().collect(),
            Adaptation::Remap { map, fill } => lofi
                .map(|a| {
                    EnvironmentAction::new(
                        map.iter()
                            .map(|c| c.map_or(*fill, |c| a.values()[c]))
                            .collect(),
                    )
                })
                .collect(),
        }
    }
}

fn check_same_dim(lofi: usize, hifi: usize) -> Result<()> {
    if lofi != hifi {
        return Err(Error::Adaptation(format!(
            "lofi actions have {lofi} channels but hifi expects {hifi}; use a channel remap"
        )));
    }
    Ok(())
}

/// Maps a lofi trajectory's actions with `adaptation` and replays them in
/// the hifi simulator from reset. The failure flag comes from the replay.
pub fn adapt<S: Simulator + ?Sized>(
    lofi: &Trajectory,
    lofi_action_dim: usize,
    lofi_horizon: usize,
    adaptation: &Adaptation,
    hifi: &mut S,
    mut source: DemoSource,
) -> Result<ExpertDemonstration> {
    if lofi.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    adaptation.check(
        lofi_action_dim,
        lofi_horizon,
        hifi.action_dim(),
        hifi.horizon(),
    )?;
    source.adaptation = adaptation.name();
    let actions = adaptation.map_actions(lofi.actions());
    Ok(ExpertDemonstration::record(hifi, actions, source)?.0)
}

fn lofi_shape(lofi: &Trajectory) -> Result<usize> {
    lofi.steps
        .first()
        .map(|s| s.action.dim())
        .ok_or(Error::EmptyTrajectory)
}

/// Repeats every lofi action `k` times and replays the result in hifi.
pub fn adapt_repeat<S: Simulator + ?Sized>(
    lofi: &Trajectory,
    k: usize,
    hifi: &mut S,
) -> Result<ExpertDemonstration> {
    let dim = lofi_shape(lofi)?;
    let lofi_horizon = hifi.horizon().checked_div(k).unwrap_or(0);
    if k == 0 || !hifi.horizon().is_multiple_of(k) || lofi.start_t + lofi.len() > lofi_horizon {
        return Err(Error::Adaptation(format!(
            "repeat factor {k} does not fit a {}-step lofi trajectory into hifi horizon {}",
            lofi.len(),
            hifi.horizon()
        )));
    }
    adapt(
        lofi,
        dim,
        lofi_horizon,
        &Adaptation::Repeat { k },
        hifi,
        DemoSource::default(),
    )
}

/// Replays the lofi actions verbatim in hifi.
pub fn adapt_replay<S: Simulator + ?Sized>(
    lofi: &Trajectory,
    hifi: &mut S,
) -> Result<ExpertDemonstration> {
    let dim = lofi_shape(lofi)?;
    let horizon = hifi.horizon();
    adapt(
        lofi,
        dim,
        horizon,
        &Adaptation::Replay,
        hifi,
        DemoSource::default(),
    )
}

/// Assembles hifi actions channel by channel and replays them in hifi.
pub fn adapt_remap<S: Simulator + ?Sized>(
    lofi: &Trajectory,
    map: &[Option<usize>],
    fill: f64,
    hifi: &mut S,
) -> Result<ExpertDemonstration> {
    let dim = lofi_shape(lofi)?;
    let horizon = hifi.horizon();
    let adaptation = Adaptation::Remap {
        map: map.to_vec(),
        fill,
    };
    adapt(lofi, dim, horizon, &adaptation, hifi, DemoSource::default())
}

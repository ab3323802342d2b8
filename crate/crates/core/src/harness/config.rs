use serde::{Deserialize, Serialize};

use crate::backward::{Adaptation, BaConfig};
use crate::crosswalk::{CrosswalkSim, FidelityConfig, ScenarioConfig, SensorModel};
use crate::error::{Error, Result};
use crate::ppo::PpoConfig;

/// A scenario at one fidelity level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSetup {
    pub scenario: ScenarioConfig,
    pub fidelity: FidelityConfig,
}

impl SimSetup {
    pub fn build(&self) -> Result<CrosswalkSim> {
        CrosswalkSim::new(self.scenario.clone(), self.fidelity.clone())
    }
}

/// Simulator step budgets per seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub lofi_steps: u64,
    pub hifi_steps: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            lofi_steps: 500_000,
            hifi_steps: 500_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub seeds: Vec<u64>,
    pub lofi: SimSetup,
    pub hifi: SimSetup,
    pub adaptation: Adaptation,
    #[serde(default)]
    pub solver: PpoConfig,
    #[serde(default)]
    pub ba: BaConfig,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

fn default_true() -> bool {
    true
}

pub const PRESETS: [&str; 4] = ["time", "dynamics", "tracker", "perception"];

impl ExperimentConfig {
    /// One of the built-in case studies: `time`, `dynamics`, `tracker` or
    /// `perception`.
    pub fn preset(name: &str) -> Result<Self> {
        let hifi = FidelityConfig::hifi();
        let mut scenario = ScenarioConfig::default();
        let (lofi, adaptation) = match name {
            "time" => (
                FidelityConfig {
                    dt: 0.5,
                    horizon: 10,
                    ..hifi.clone()
                },
                Adaptation::Repeat { k: 5 },
            ),
            "dynamics" => (
                FidelityConfig {
                    quantize_decimals: Some(1),
                    ..hifi.clone()
                },
                Adaptation::Replay,
            ),
            "tracker" => (
                FidelityConfig {
                    tracker_enabled: false,
                    ..hifi.clone()
                },
                Adaptation::Replay,
            ),
            "perception" => {
                scenario = ScenarioConfig::perception();
                (
                    hifi.clone(),
                    Adaptation::Remap {
                        map: vec![Some(0), Some(1), None],
                        fill: 0.0,
                    },
                )
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown preset {other:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        let hifi = if name == "perception" {
            FidelityConfig {
                sensor_model: SensorModel::Lidar,
                ..hifi
            }
        } else {
            hifi
        };
        Ok(Self {
            name: name.to_string(),
            seeds: vec![0, 1, 2],
            lofi: SimSetup {
                scenario: scenario.clone(),
                fidelity: lofi,
            },
            hifi: SimSetup {
                scenario,
                fidelity: hifi,
            },
            adaptation,
            solver: PpoConfig::default(),
            ba: BaConfig::default(),
            budgets: Budgets::default(),
            warm_start: true,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.budgets.lofi_steps == 0 || self.budgets.hifi_steps == 0 {
            return Err(Error::InvalidConfig("budgets must be positive".into()));
        }
        self.solver.validate()?;
        self.ba.validate()?;
        self.lofi.scenario.validate()?;
        self.hifi.scenario.validate()?;
        self.adaptation.check(
            self.lofi.fidelity.action_dim(),
            self.lofi.fidelity.horizon,
            self.hifi.fidelity.action_dim(),
            self.hifi.fidelity.horizon,
        )
    }
}

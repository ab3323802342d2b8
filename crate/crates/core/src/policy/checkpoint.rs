use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PolicyParams, PolicyShape};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointConfig {
    pub obs_dim: usize,
    pub hidden: usize,
    pub action_dim: usize,
    /// Free-form description of the scenario the policy was trained on.
    #[serde(default)]
    pub scenario: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// On-disk policy: `{version, config, params: [{name, shape, data}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: CheckpointConfig,
    pub params: Vec<NamedArray>,
}

impl Checkpoint {
    pub fn from_params(params: &PolicyParams, scenario: serde_json::Value) -> Self {
        let shape = params.shape();
        let flat = params.as_flat();
        let blocks = shape.blocks();
        let params = blocks
            .iter()
            .map(|(name, dims, offset)| {
                let n: usize = dims.iter().product();
                NamedArray {
                    name: name.to_string(),
                    shape: dims.clone(),
                    data: flat[*offset..offset + n].to_vec(),
                }
            })
            .collect();
        Self {
            version: CHECKPOINT_VERSION,
            config: CheckpointConfig {
                obs_dim: shape.obs_dim,
                hidden: shape.hidden,
                action_dim: shape.action_dim,
                scenario,
            },
            params,
        }
    }

    pub fn shape(&self) -> PolicyShape {
        PolicyShape {
            obs_dim: self.config.obs_dim,
            hidden: self.config.hidden,
            action_dim: self.config.action_dim,
        }
    }

    /// Rebuilds the parameters, checking every named block's shape.
    pub fn to_params(&self) -> Result<PolicyParams> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {}",
                self.version
            )));
        }
        let shape = self.shape();
        let blocks = shape.blocks();
        if blocks.len() != self.params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter arrays, found {}",
                blocks.len(),
                self.params.len()
            )));
        }
        let mut flat = vec![0.0; shape.param_count()];
        for ((name, dims, offset), arr) in blocks.iter().zip(&self.params) {
            let n: usize = dims.iter().product();
            if arr.name != *name || arr.shape != *dims || arr.data.len() != n {
                return Err(Error::Checkpoint(format!(
                    "array {} {:?} does not match expected {} {:?}",
                    arr.name, arr.shape, name, dims
                )));
            }
            flat[*offset..offset + n].copy_from_slice(&arr.data);
        }
        PolicyParams::from_flat(shape, flat)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{Checkpoint, PolicyParams, PolicyShape};

/// One dimension on which a checkpoint does not fit the target scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeMismatch {
    pub field: String,
    pub checkpoint: usize,
    pub target: usize,
}

#[derive(Debug, Error)]
pub enum WarmStartError {
    #[error("checkpoint does not fit the target policy: {}", describe(.0))]
    Incompatible(Vec<ShapeMismatch>),
    #[error(transparent)]
    Checkpoint(#[from] crate::error::Error),
}

fn describe(m: &[ShapeMismatch]) -> String {
    m.iter()
        .map(|m| format!("{} {} != {}", m.field, m.checkpoint, m.target))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Lists the dimensions where `from` and `to` disagree.
pub fn shape_mismatches(from: PolicyShape, to: PolicyShape) -> Vec<ShapeMismatch> {
    [
        ("obs_dim", from.obs_dim, to.obs_dim),
        ("hidden", from.hidden, to.hidden),
        ("action_dim", from.action_dim, to.action_dim),
    ]
    .into_iter()
    .filter(|(_, a, b)| a != b)
    .map(|(field, checkpoint, target)| ShapeMismatch {
        field: field.into(),
        checkpoint,
        target,
    })
    .collect()
}

/// Loads lofi policy parameters for a hifi policy of shape `target`.
pub fn warm_start(
    checkpoint: &Checkpoint,
    target: PolicyShape,
) -> Result<PolicyParams, WarmStartError> {
    let mismatches = shape_mismatches(checkpoint.shape(), target);
    if !mismatches.is_empty() {
        return Err(WarmStartError::Incompatible(mismatches));
    }
    Ok(checkpoint.to_params()?)
}

/// [`warm_start`] followed by a fresh draw of the log-std head.
pub fn warm_start_reinit_std<R: Rng + ?Sized>(
    checkpoint: &Checkpoint,
    target: PolicyShape,
    rng: &mut R,
) -> Result<PolicyParams, WarmStartError> {
    let mut params = warm_start(checkpoint, target)?;
    params.reinit_log_std(rng);
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ckpt(shape: PolicyShape) -> Checkpoint {
        let params = PolicyParams::init(shape, &mut ChaCha8Rng::seed_from_u64(3));
        Checkpoint::from_params(&params, serde_json::Value::Null)
    }

    #[test]
    fn same_shape_loads() {
        let shape = PolicyShape {
            obs_dim: 11,
            hidden: 8,
            action_dim: 6,
        };
        let c = ckpt(shape);
        let p = warm_start(&c, shape).unwrap();
        assert_eq!(p, c.to_params().unwrap());
    }

    #[test]
    fn different_dims_are_reported() {
        let lofi = PolicyShape {
            obs_dim: 11,
            hidden: 8,
            action_dim: 6,
        };
        let hifi = PolicyShape {
            obs_dim: 9,
            hidden: 8,
            action_dim: 3,
        };
        match warm_start(&ckpt(lofi), hifi) {
            Err(WarmStartError::Incompatible(m)) => {
                let fields: Vec<&str> = m.iter().map(|m| m.field.as_str()).collect();
                assert_eq!(fields, ["obs_dim", "action_dim"]);
                assert_eq!((m[1].checkpoint, m[1].target), (6, 3));
            }
            other => panic!("expected incompatibility, got {other:?}"),
        }
    }
}

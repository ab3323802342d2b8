//! Recurrent Gaussian policy: a single GRU layer shared by a mean head, a
//! state-dependent log-std head and a value head, with hand-derived
//! backpropagation through time.

mod checkpoint;
mod network;
pub mod observation;

pub use checkpoint::{Checkpoint, CheckpointConfig, NamedArray, CHECKPOINT_VERSION};
pub use network::{
    log_prob, sample_action, EpisodeCache, HeadGrads, PolicyOutput, PolicyParams, PolicyShape,
    LOG_STD_MAX, LOG_STD_MIN,
};

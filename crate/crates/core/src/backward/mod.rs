//! The backward algorithm: a lofi failure is adapted into a hifi
//! demonstration, and PPO trains from restart points that move from its end
//! toward its start.

mod adapt;
mod demo;
mod schedule;
mod warm;

pub use adapt::{adapt, adapt_remap, adapt_repeat, adapt_replay, Adaptation};
pub use demo::{DemoSource, DemoStep, ExpertDemonstration};
pub use schedule::{
    run_backward, BaConfig, BaOutcome, BaOutcomeKind, BaSchedule, BaStatus, ScheduleEntry,
};
pub use warm::{
    shape_mismatches, warm_start, warm_start_reinit_std, ShapeMismatch, WarmStartError,
};

//! Deploying a trained policy as the Mirror Mode red team.

mod repair;
mod runtime;

pub use repair::{repair_action, Repair, RepairStats};
pub use runtime::{act, from_perspective, mirror_setup, perspective_state, MirrorAgent, MirrorError, MirrorReport, MirrorSession};

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::instantiation::Support;
use crate::types::Pose;

/// One control command. Deltas are clamped to the configured per-step bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    MoveDelta {
        dx: f64,
        dy: f64,
        dz: f64,
        #[serde(default)]
        dyaw: f64,
    },
    Grasp,
    Release,
    SetArticulation {
        joint: String,
        value: f64,
    },
    NoOp,
    Terminate,
}

impl Action {
    pub fn translate(dx: f64, dy: f64, dz: f64) -> Self {
        Self::MoveDelta { dx, dy, dz, dyaw: 0.0 }
    }

    pub fn is_noop(&self) -> bool {
        matches!(self, Self::NoOp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    GraspAttempt { target: Option<String>, valid: bool, aborted: bool },
    ReleaseAt { instance: String, pose: Pose, landed: Support },
    SubgoalCompleted { id: String },
    ArticulationChanged { joint: String, value: f64 },
    Terminated,
}

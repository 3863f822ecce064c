//! Tunable constants. Every value can be overridden from a config file and
//! is echoed into each episode log header.

use serde::{Deserialize, Serialize};

use crate::geometry::{Camera, Rect};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Per-step translation bound, meters.
    pub delta_max: f64,
    /// Per-step gripper yaw bound, radians.
    pub yaw_step_max: f64,
    pub r_grasp: f64,
    pub tau_support: f64,
    pub tau_p: f64,
    /// degrees
    pub tau_y_deg: f64,
    pub tau_p_ins: f64,
    /// degrees
    pub tau_y_ins_deg: f64,
    pub omega_max: f64,
    pub eps_pen: f64,
    pub r_max: u32,
    pub grid: f64,
    pub articulation_tol: f64,
    /// Joint value at or above which a container cavity is reachable.
    pub open_threshold: f64,
    pub camera: Camera,
    pub workspace: Rect,
    pub reach_region: Rect,
    pub gripper_z: [f64; 2],
    pub home: [f64; 3],
    pub travel_height: f64,
    pub max_steps: u32,
    pub action_timeout_ms: u64,
    /// Classifier knobs.
    pub freeze_steps: u32,
    pub freeze_eps: f64,
    pub osc_window: u32,
    pub osc_amplitude: f64,
    pub osc_reversals: u32,
    pub correct_freeze_actions: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            delta_max: 0.05,
            yaw_step_max: 0.2,
            r_grasp: 0.03,
            tau_support: 0.5,
            tau_p: 0.02,
            tau_y_deg: 10.0,
            tau_p_ins: 0.005,
            tau_y_ins_deg: 5.0,
            omega_max: 0.1,
            eps_pen: 0.001,
            r_max: 1000,
            grid: 0.05,
            articulation_tol: 0.05,
            open_threshold: 0.5,
            camera: Camera::default(),
            workspace: Rect { min: [0.0, 0.1], max: [1.0, 0.9] },
            reach_region: Rect { min: [0.1, 0.2], max: [0.9, 0.8] },
            gripper_z: [0.0, 0.5],
            home: [0.5, 0.15, 0.35],
            travel_height: 0.3,
            max_steps: 500,
            action_timeout_ms: 10_000,
            freeze_steps: 20,
            freeze_eps: 1e-3,
            osc_window: 40,
            osc_amplitude: 0.05,
            osc_reversals: 3,
            correct_freeze_actions: 3,
        }
    }
}

impl SimConfig {
    pub fn tau_y(&self) -> f64 {
        self.tau_y_deg.to_radians()
    }

    pub fn tau_y_ins(&self) -> f64 {
        self.tau_y_ins_deg.to_radians()
    }
}

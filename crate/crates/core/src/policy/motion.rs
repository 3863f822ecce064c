use alloc::collections::VecDeque;
use alloc::string::String;

use crate::config::SimConfig;
use crate::math::{clamp, yaw_difference};
use crate::sim::{Action, Observation};

#[derive(Debug, Clone, PartialEq)]
pub enum MotionStep {
    /// Straight-line move; `yaw` is an absolute gripper yaw.
    To { position: [f64; 3], yaw: Option<f64> },
    Grasp,
    Release,
    Joint { joint: String, value: f64 },
    NoOp,
    Terminate,
}

/// Queue of waypoints and gripper commands, turned into bounded actions
/// one step at a time using proprioception.
#[derive(Debug, Clone, Default)]
pub struct Motion {
    queue: VecDeque<(MotionStep, Option<String>)>,
    current: Option<String>,
}

const ARRIVED: f64 = 1e-9;

impl Motion {
    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn clear(&mut self) {
        self.queue.clear();
    }

    /// Anchor of the step that produced the last action.
    pub fn anchor(&self) -> Option<String> {
        self.current.clone()
    }

    pub fn push(&mut self, step: MotionStep, anchor: Option<&str>) {
        self.queue.push_back((step, anchor.map(String::from)));
    }

    pub fn to(&mut self, cfg: &SimConfig, p: [f64; 3], yaw: Option<f64>, anchor: Option<&str>) {
        let [x, y] = cfg.workspace.clamp([p[0], p[1]]);
        let z = clamp(p[2], cfg.gripper_z[0], cfg.gripper_z[1]);
        self.push(MotionStep::To { position: [x, y, z], yaw }, anchor);
    }

    /// Lift, travel above `from`, descend, grasp, lift, carry to `to` at
    /// travel height turning the held object to `to_yaw`, release.
    #[allow(clippy::too_many_arguments)]
    pub fn pick_place(
        &mut self,
        cfg: &SimConfig,
        obs: &Observation,
        from: [f64; 3],
        object_yaw: f64,
        to: [f64; 2],
        to_yaw: Option<f64>,
        object: &str,
        destination: &str,
    ) {
        let h = cfg.travel_height;
        let g = obs.proprio.position;
        let grip_yaw = to_yaw.map(|ty| obs.proprio.yaw + yaw_difference(ty, object_yaw));
        self.to(cfg, [g[0], g[1], h], None, Some(object));
        self.to(cfg, [from[0], from[1], h], None, Some(object));
        self.to(cfg, from, None, Some(object));
        self.push(MotionStep::Grasp, Some(object));
        self.to(cfg, [from[0], from[1], h], None, Some(object));
        self.to(cfg, [to[0], to[1], h], grip_yaw, Some(destination));
        self.push(MotionStep::Release, Some(destination));
    }

    /// Reach for `at` and close the gripper there.
    pub fn reach_and_grasp(&mut self, cfg: &SimConfig, obs: &Observation, at: [f64; 3]) {
        let h = cfg.travel_height;
        let g = obs.proprio.position;
        self.to(cfg, [g[0], g[1], h], None, None);
        self.to(cfg, [at[0], at[1], h], None, None);
        self.to(cfg, at, None, None);
        self.push(MotionStep::Grasp, None);
        self.to(cfg, [at[0], at[1], h], None, None);
    }

    /// Next action, or `None` once the queue is exhausted.
    pub fn next(&mut self, obs: &Observation, cfg: &SimConfig) -> Option<Action> {
        while let Some((step, anchor)) = self.queue.front().cloned() {
            self.current = anchor;
            match step {
                MotionStep::To { position, yaw } => {
                    let p = obs.proprio.position;
                    let d = [position[0] - p[0], position[1] - p[1], position[2] - p[2]];
                    let dyaw = yaw.map_or(0.0, |y| yaw_difference(y, obs.proprio.yaw));
                    if d.iter().all(|v| v.abs() < ARRIVED) && dyaw.abs() < ARRIVED {
                        self.queue.pop_front();
                        continue;
                    }
                    let m = cfg.delta_max;
                    let ym = cfg.yaw_step_max;
                    return Some(Action::MoveDelta {
                        dx: clamp(d[0], -m, m),
                        dy: clamp(d[1], -m, m),
                        dz: clamp(d[2], -m, m),
                        dyaw: clamp(dyaw, -ym, ym),
                    });
                }
                MotionStep::Joint { joint, value } => match obs.articulations.get(&joint) {
                    Some(cur) if (cur - value).abs() >= ARRIVED => {
                        return Some(Action::SetArticulation { joint, value });
                    }
                    _ => {
                        self.queue.pop_front();
                    }
                },
                MotionStep::Grasp => {
                    self.queue.pop_front();
                    return Some(Action::Grasp);
                }
                MotionStep::Release => {
                    self.queue.pop_front();
                    return Some(Action::Release);
                }
                MotionStep::NoOp => {
                    self.queue.pop_front();
                    return Some(Action::NoOp);
                }
                MotionStep::Terminate => {
                    self.queue.pop_front();
                    return Some(Action::Terminate);
                }
            }
        }
        None
    }
}

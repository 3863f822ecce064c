use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::action::{Action, Event};
use super::success::{holds, order_violation};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::geometry::{footprint, Rect};
use crate::goal::GoalSpec;
use crate::instantiation::Support;
use crate::math::{clamp, dist3, normalize_yaw};
use crate::perturbation::Variation;
use crate::types::{AttributeVector, Pose, Role};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub pose: Pose,
    pub half_extents: [f64; 3],
    pub attribute_vector: AttributeVector,
    pub support: Support,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container_cavity: Option<[f64; 3]>,
    /// Qualified names of this object's joints.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub joints: Vec<String>,
}

impl ObjectState {
    pub fn footprint(&self) -> Rect {
        footprint(&self.pose, self.half_extents)
    }

    pub fn top(&self) -> f64 {
        self.pose.z + self.half_extents[2]
    }

    pub fn floor(&self) -> f64 {
        self.pose.z - self.half_extents[2]
    }

    pub fn cavity_footprint(&self) -> Option<Rect> {
        self.container_cavity.map(|c| footprint(&self.pose, c))
    }

    pub fn contained(&self) -> bool {
        matches!(self.support, Support::In(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gripper {
    pub position: [f64; 3],
    pub yaw: f64,
    pub held: Option<String>,
    /// Object yaw minus gripper yaw at the moment of grasping.
    pub grasp_yaw_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub subgoal_id: String,
    pub done: bool,
    pub done_at: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub t: u32,
    pub objects: BTreeMap<String, ObjectState>,
    pub articulations: BTreeMap<String, f64>,
    pub gripper: Gripper,
    pub subgoal_ledger: Vec<LedgerEntry>,
    pub terminated: bool,
}

impl WorldState {
    /// A container's cavity is reachable when every joint is open enough.
    pub fn accessible(&self, container: &str, open_threshold: f64) -> bool {
        self.objects
            .get(container)
            .is_some_and(|c| c.joints.iter().all(|j| self.articulations.get(j).copied().unwrap_or(1.0) >= open_threshold))
    }

    /// Geometric containment: center over the cavity and bottom below the
    /// container's rim.
    pub fn geometrically_contained(&self, name: &str, container: &str) -> bool {
        let (Some(o), Some(c)) = (self.objects.get(name), self.objects.get(container)) else { return false };
        let Some(cav) = c.cavity_footprint() else { return false };
        cav.contains(o.pose.xy()) && o.floor() < c.top() - 1e-9 && o.floor() >= c.floor() - 1e-9
    }

    /// Where an object released at its current planar position comes to
    /// rest. Open cavities win, then the highest overlapped object, then
    /// the table.
    pub fn landing(&self, name: &str, cfg: &SimConfig) -> (Support, f64) {
        let o = &self.objects[name];
        let hz = o.half_extents[2];
        for (cn, c) in &self.objects {
            if cn == name || c.support == Support::Held {
                continue;
            }
            if c.cavity_footprint().is_some_and(|cav| cav.contains(o.pose.xy())) && self.accessible(cn, cfg.open_threshold) {
                return (Support::In(cn.clone()), c.floor() + hz);
            }
        }
        let fp = o.footprint();
        let mut best: Option<(&String, f64)> = None;
        for (n, other) in &self.objects {
            if n == name || other.support == Support::Held || self.rests_on(n, name) {
                continue;
            }
            if other.footprint().penetration(&fp) > cfg.eps_pen && best.is_none_or(|(_, top)| other.top() > top) {
                best = Some((n, other.top()));
            }
        }
        match best {
            Some((n, top)) => (Support::On(n.clone()), top + hz),
            None => (Support::Table, hz),
        }
    }

    /// Whether `a` sits (directly or transitively) on `b`.
    fn rests_on(&self, a: &str, b: &str) -> bool {
        let mut cur = a;
        for _ in 0..self.objects.len() {
            match self.objects.get(cur).map(|o| &o.support) {
                Some(Support::On(x)) | Some(Support::In(x)) => {
                    if x == b {
                        return true;
                    }
                    cur = x;
                }
                _ => return false,
            }
        }
        false
    }
}

/// A live episode: state plus the goal bookkeeping the step function needs.
#[derive(Debug, Clone)]
pub struct World {
    pub state: WorldState,
    pub goal: GoalSpec,
    pub cfg: SimConfig,
    pub instruction: String,
    /// Instance names in scene order; observation handles index into it.
    pub scene_order: Vec<String>,
    /// Subgoal ids that apply to this scene, in goal order.
    pub effective: Vec<String>,
    pub required_order: Vec<String>,
    /// Set when the goal names an instance that is not in the scene.
    pub premise_violation: Option<String>,
    pub pre_satisfied: bool,
    pub goal_met_at: Option<u32>,
    pub grasp_after_goal: bool,
}

impl World {
    pub fn reset(v: &Variation, cfg: &SimConfig) -> Self {
        let mut objects = BTreeMap::new();
        let mut articulations = BTreeMap::new();
        for o in &v.scene.objects {
            let mut joints = Vec::new();
            for a in &o.articulations {
                let id = o.joint_id(&a.joint_name);
                articulations.insert(id.clone(), clamp(a.initial, 0.0, 1.0));
                joints.push(id);
            }
            objects.insert(
                o.instance_name.clone(),
                ObjectState {
                    pose: o.pose,
                    half_extents: o.half_extents,
                    attribute_vector: o.attribute_vector.clone(),
                    support: o.support.clone(),
                    role: o.role,
                    container_cavity: o.container_cavity,
                    joints,
                },
            );
        }
        let state = WorldState {
            t: 0,
            objects,
            articulations,
            gripper: Gripper { position: cfg.home, yaw: 0.0, held: None, grasp_yaw_offset: 0.0 },
            subgoal_ledger: Vec::new(),
            terminated: false,
        };
        let mut w = World {
            state,
            goal: v.goal.clone(),
            cfg: cfg.clone(),
            instruction: v.instruction.clone(),
            scene_order: v.scene.objects.iter().map(|o| o.instance_name.clone()).collect(),
            effective: Vec::new(),
            required_order: Vec::new(),
            premise_violation: None,
            pre_satisfied: false,
            goal_met_at: None,
            grasp_after_goal: false,
        };
        match v.goal.effective(|n| w.state.objects.contains_key(n)) {
            Ok(eff) => w.effective = eff.iter().map(|s| s.id.clone()).collect(),
            Err(Error::GoalReferencesAbsent(n)) => w.premise_violation = Some(n),
            Err(e) => w.premise_violation = Some(e.to_string()),
        }
        w.required_order = v
            .required_order
            .iter()
            .flatten()
            .filter(|id| w.effective.contains(id))
            .cloned()
            .collect();
        w.state.subgoal_ledger = w
            .effective
            .iter()
            .map(|id| LedgerEntry { subgoal_id: id.clone(), done: false, done_at: None })
            .collect();
        w.update_ledger(&mut Vec::new());
        if w.goal_satisfied() {
            w.pre_satisfied = true;
            w.goal_met_at = Some(0);
        }
        w
    }

    pub fn subgoal_holds(&self, id: &str) -> bool {
        self.goal.get(id).is_some_and(|s| holds(&self.state, &self.goal, s))
    }

    /// All applicable subgoal predicates hold right now.
    pub fn goal_satisfied(&self) -> bool {
        self.premise_violation.is_none()
            && !self.effective.is_empty()
            && self.effective.iter().all(|id| self.subgoal_holds(id))
    }

    pub fn order_respected(&self) -> bool {
        order_violation(&self.state.subgoal_ledger, &self.required_order).is_none()
    }

    /// Success as the episode driver reports it: the policy terminated
    /// with the goal holding, completed in the required order, starting
    /// from an unfinished state, without grasping after it was done.
    pub fn episode_success(&self) -> bool {
        self.state.terminated
            && self.goal_satisfied()
            && self.order_respected()
            && !self.pre_satisfied
            && !self.grasp_after_goal
    }

    pub fn is_target(&self, name: &str) -> bool {
        self.effective
            .iter()
            .filter_map(|id| self.goal.get(id))
            .any(|s| s.subject() == Some(name))
    }

    fn update_ledger(&mut self, events: &mut Vec<Event>) {
        let t = self.state.t;
        for i in 0..self.state.subgoal_ledger.len() {
            if self.state.subgoal_ledger[i].done {
                continue;
            }
            let id = self.state.subgoal_ledger[i].subgoal_id.clone();
            if self.subgoal_holds(&id) {
                let e = &mut self.state.subgoal_ledger[i];
                e.done = true;
                e.done_at = Some(t);
                events.push(Event::SubgoalCompleted { id });
            }
        }
    }

    /// Advances one step. Deterministic: no randomness inside.
    pub fn step(&mut self, action: &Action) -> Result<Vec<Event>> {
        if self.state.terminated {
            return Err(Error::EpisodeOver);
        }
        let mut events = Vec::new();
        match action {
            Action::MoveDelta { dx, dy, dz, dyaw } => self.move_gripper([*dx, *dy, *dz], *dyaw),
            Action::Grasp => self.grasp(&mut events),
            Action::Release => self.release(&mut events),
            Action::SetArticulation { joint, value } => {
                let cur = *self.state.articulations.get(joint).ok_or_else(|| Error::UnknownJoint(joint.clone()))?;
                let target = clamp(*value, 0.0, 1.0);
                let next = cur + clamp(target - cur, -self.cfg.omega_max, self.cfg.omega_max);
                if next != cur {
                    self.state.articulations.insert(joint.clone(), next);
                    events.push(Event::ArticulationChanged { joint: joint.clone(), value: next });
                }
            }
            Action::NoOp => {}
            Action::Terminate => {
                self.state.terminated = true;
                events.push(Event::Terminated);
            }
        }
        self.state.t += 1;
        self.update_ledger(&mut events);
        if self.goal_met_at.is_none() && self.goal_satisfied() {
            self.goal_met_at = Some(self.state.t);
        }
        Ok(events)
    }

    fn move_gripper(&mut self, d: [f64; 3], dyaw: f64) {
        let m = self.cfg.delta_max;
        let g = &mut self.state.gripper;
        let ws = self.cfg.workspace;
        let [x, y] = ws.clamp([g.position[0] + clamp(d[0], -m, m), g.position[1] + clamp(d[1], -m, m)]);
        let z = clamp(g.position[2] + clamp(d[2], -m, m), self.cfg.gripper_z[0], self.cfg.gripper_z[1]);
        g.position = [x, y, z];
        g.yaw = normalize_yaw(g.yaw + clamp(dyaw, -self.cfg.yaw_step_max, self.cfg.yaw_step_max));
        if let Some(h) = g.held.clone() {
            let yaw = g.yaw + g.grasp_yaw_offset;
            self.state.objects.get_mut(&h).expect("held object exists").pose = Pose::new(x, y, z, yaw);
        }
    }

    fn grasp(&mut self, events: &mut Vec<Event>) {
        if self.state.gripper.held.is_some() {
            return;
        }
        if self.goal_satisfied() {
            self.grasp_after_goal = true;
        }
        let gp = self.state.gripper.position;
        let mut best: Option<(&String, f64)> = None;
        for (n, o) in &self.state.objects {
            if !o.role.movable() {
                continue;
            }
            if let Support::In(c) = &o.support {
                if !self.state.accessible(c, self.cfg.open_threshold) {
                    continue;
                }
            }
            let d = dist3(gp, o.pose.xyz());
            if d <= self.cfg.r_grasp && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((n, d));
            }
        }
        let Some((name, _)) = best else {
            events.push(Event::GraspAttempt { target: None, valid: false, aborted: true });
            return;
        };
        let name = name.clone();
        let valid = self.is_target(&name);
        let g = &mut self.state.gripper;
        let o = self.state.objects.get_mut(&name).expect("candidate exists");
        g.grasp_yaw_offset = normalize_yaw(o.pose.yaw - g.yaw);
        g.held = Some(name.clone());
        o.support = Support::Held;
        o.pose = Pose::new(g.position[0], g.position[1], g.position[2], o.pose.yaw);
        events.push(Event::GraspAttempt { target: Some(name.clone()), valid, aborted: false });
        self.resettle_dependents(&name);
    }

    /// Objects that rested on a removed object drop to whatever is below.
    fn resettle_dependents(&mut self, removed: &str) {
        let mut deps: Vec<(f64, String)> = self
            .state
            .objects
            .iter()
            .filter(|(_, o)| matches!(&o.support, Support::On(b) if b == removed))
            .map(|(n, o)| (o.pose.z, n.clone()))
            .collect();
        deps.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        for (_, n) in deps {
            let (support, z) = self.state.landing(&n, &self.cfg);
            let o = self.state.objects.get_mut(&n).expect("dependent exists");
            o.support = support;
            o.pose.z = z;
            self.resettle_dependents(&n);
        }
    }

    fn release(&mut self, events: &mut Vec<Event>) {
        let Some(name) = self.state.gripper.held.take() else { return };
        let (support, z) = self.state.landing(&name, &self.cfg);
        let o = self.state.objects.get_mut(&name).expect("held object exists");
        o.pose.z = z;
        o.support = support.clone();
        events.push(Event::ReleaseAt { instance: name, pose: o.pose, landed: support });
    }
}

//! Demonstration recording, segmentation, and retargeting to new scenes by
//! per-segment planar rigid transforms.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::math::{ceil, normalize_yaw, rotate2, yaw_difference};
use crate::perturbation::Variation;
use crate::policy::{builtin, run_episode, EpisodeContext, Limits};
use crate::sim::{Action, Event, Fidelity, World};
use crate::types::Pose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoStep {
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
}

/// Inclusive step span manipulated relative to one anchor instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub anchor: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub variation_id: String,
    pub steps: Vec<DemoStep>,
    pub segments: Vec<Segment>,
    /// Pose of each segment's anchor when the segment begins.
    pub segment_poses: Vec<Pose>,
    /// Gripper position and yaw before the first step.
    pub start: [f64; 3],
    pub start_yaw: f64,
}

/// Maximal runs of one anchor. Steps without an anchor join the run before
/// them; a leading unannotated run joins the first annotated one.
pub fn segment_demo(steps: &[DemoStep]) -> Result<Vec<Segment>> {
    let first = steps.iter().find_map(|s| s.anchor.clone()).ok_or(Error::MissingAnnotations)?;
    let mut out: Vec<Segment> = Vec::new();
    let mut current = first;
    for (i, s) in steps.iter().enumerate() {
        if let Some(a) = &s.anchor {
            current = a.clone();
        }
        match out.last_mut() {
            Some(seg) if seg.anchor == current => seg.end = i,
            _ => out.push(Segment { anchor: current.clone(), start: i, end: i }),
        }
    }
    Ok(out)
}

/// Runs the oracle on `v` and keeps its actions with their anchors.
pub fn record_demo(v: &Variation, cfg: &SimConfig) -> Result<Demonstration> {
    let mut oracle = builtin("oracle")?;
    let ctx = EpisodeContext { variation: v, train: Vec::new(), cfg, fidelity: Fidelity::Full, seed: 0 };
    let log = run_episode(&mut *oracle, &ctx, Limits::from(cfg))?;
    if !log.end.success {
        return Err(Error::Precondition(format!("oracle did not solve {}", v.id)));
    }
    let steps: Vec<DemoStep> =
        log.steps.iter().map(|s| DemoStep { action: s.action.clone(), anchor: s.annotation.clone() }).collect();
    let segments = segment_demo(&steps)?;
    let mut segment_poses = Vec::new();
    for seg in &segments {
        let frame = if seg.start == 0 { &log.reset } else { &log.steps[seg.start - 1].frame };
        let o = frame.object(&seg.anchor).ok_or_else(|| Error::AnchorMissing(seg.anchor.clone()))?;
        segment_poses.push(o.pose);
    }
    Ok(Demonstration {
        variation_id: v.id.clone(),
        segment_poses,
        steps,
        segments,
        start: cfg.home,
        start_yaw: 0.0,
    })
}

/// Planar rigid motion of one anchor from its demo pose to its new pose,
/// plus the change in height.
#[derive(Debug, Clone, Copy)]
struct Transform {
    from: Pose,
    to: Pose,
}

impl Transform {
    fn theta(&self) -> f64 {
        normalize_yaw(self.to.yaw - self.from.yaw)
    }

    fn is_identity(&self) -> bool {
        self.from == self.to
    }

    fn point(&self, p: [f64; 3]) -> [f64; 3] {
        if self.is_identity() {
            return p;
        }
        let r = rotate2([p[0] - self.from.x, p[1] - self.from.y], self.theta());
        [r[0] + self.to.x, r[1] + self.to.y, p[2] + self.to.z - self.from.z]
    }

    fn delta(&self, d: [f64; 3]) -> [f64; 3] {
        if self.is_identity() {
            return d;
        }
        let r = rotate2([d[0], d[1]], self.theta());
        [r[0], r[1], d[2]]
    }
}

/// Splits a displacement into equal moves within the per-step bounds.
fn bounded_moves(d: [f64; 3], dyaw: f64, cfg: &SimConfig) -> Vec<Action> {
    let lin = d.iter().fold(0.0f64, |m, v| m.max(v.abs())) / cfg.delta_max;
    let ang = dyaw.abs() / cfg.yaw_step_max;
    let n = ceil(lin.max(ang) - 1e-12).max(1.0) as usize;
    if n == 1 {
        return alloc::vec![Action::MoveDelta { dx: d[0], dy: d[1], dz: d[2], dyaw }];
    }
    let k = n as f64;
    (0..n).map(|_| Action::MoveDelta { dx: d[0] / k, dy: d[1] / k, dz: d[2] / k, dyaw: dyaw / k }).collect()
}

fn in_reach(p: [f64; 3], cfg: &SimConfig) -> bool {
    const SLACK: f64 = 1e-9;
    let w = &cfg.workspace;
    p[0] >= w.min[0] - SLACK
        && p[0] <= w.max[0] + SLACK
        && p[1] >= w.min[1] - SLACK
        && p[1] <= w.max[1] + SLACK
        && p[2] >= cfg.gripper_z[0] - SLACK
        && p[2] <= cfg.gripper_z[1] + SLACK
}

/// Gripper position and yaw before each step, plus the final one, as the
/// simulator would clamp them.
fn waypoints(demo: &Demonstration, cfg: &SimConfig) -> Vec<([f64; 3], f64)> {
    let mut p = demo.start;
    let mut yaw = demo.start_yaw;
    let mut out = alloc::vec![(p, yaw)];
    for s in &demo.steps {
        if let Action::MoveDelta { dx, dy, dz, dyaw } = s.action {
            let m = cfg.delta_max;
            let d = [dx.clamp(-m, m), dy.clamp(-m, m), dz.clamp(-m, m)];
            let [x, y] = cfg.workspace.clamp([p[0] + d[0], p[1] + d[1]]);
            p = [x, y, (p[2] + d[2]).clamp(cfg.gripper_z[0], cfg.gripper_z[1])];
            yaw = normalize_yaw(yaw + dyaw.clamp(-cfg.yaw_step_max, cfg.yaw_step_max));
        }
        out.push((p, yaw));
    }
    out
}

/// First step of a segment that is taken relative to its anchor: the
/// vertical descent leading to its first gripper command. Moves before it
/// are free transit.
fn local_start(demo: &Demonstration, seg: &Segment) -> usize {
    let vertical_descent = |i: usize| match demo.steps[i].action {
        Action::MoveDelta { dx, dy, dz, .. } => dz < 0.0 && dx.abs() < 1e-12 && dy.abs() < 1e-12,
        _ => false,
    };
    let Some(mut i) = (seg.start..=seg.end).find(|i| !matches!(demo.steps[*i].action, Action::MoveDelta { .. })) else {
        return seg.start;
    };
    while i > seg.start && vertical_descent(i - 1) {
        i -= 1;
    }
    i
}

/// Maps every segment onto its anchor's pose in `target`, rotating its
/// moves and the gripper with the anchor. Free transit is replaced by
/// straight bounded moves to the transformed start of the anchored part.
/// The target scene is simulated alongside, so each anchor pose is read
/// when its segment begins.
pub fn retarget_demo(demo: &Demonstration, target: &Variation, cfg: &SimConfig) -> Result<Demonstration> {
    let segments = if demo.segments.is_empty() { segment_demo(&demo.steps)? } else { demo.segments.clone() };
    if demo.segment_poses.len() != segments.len() {
        return Err(Error::Precondition("demonstration has no pose for every segment".into()));
    }
    let way = waypoints(demo, cfg);
    let mut world = World::reset(target, cfg);
    let mut steps: Vec<DemoStep> = Vec::new();
    let mut segment_poses = Vec::new();
    let emit = |world: &mut World, steps: &mut Vec<DemoStep>, step: DemoStep| -> Result<()> {
        world.step(&step.action)?;
        steps.push(step);
        Ok(())
    };
    for (seg, from) in segments.iter().zip(&demo.segment_poses) {
        let to = world.state.objects.get(&seg.anchor).ok_or_else(|| Error::AnchorMissing(seg.anchor.clone()))?.pose;
        segment_poses.push(to);
        let tf = Transform { from: *from, to };
        let turn = if tf.is_identity() { 0.0 } else { tf.theta() };
        let local = local_start(demo, seg);
        let (p, yaw) = way[local];
        let entry = tf.point(p);
        let at = world.state.gripper.position;
        let gap = [entry[0] - at[0], entry[1] - at[1], entry[2] - at[2]];
        let gap_yaw = yaw_difference(yaw + turn, world.state.gripper.yaw);
        if gap.iter().any(|g| g.abs() > 1e-12) || gap_yaw.abs() > 1e-12 {
            for a in bounded_moves(gap, gap_yaw, cfg) {
                emit(&mut world, &mut steps, DemoStep { action: a, anchor: Some(seg.anchor.clone()) })?;
            }
        }
        for i in local..=seg.end {
            if !in_reach(tf.point(way[i + 1].0), cfg) {
                return Err(Error::UnreachableWaypoint { step: i });
            }
            let s = &demo.steps[i];
            match &s.action {
                Action::MoveDelta { dx, dy, dz, dyaw } => {
                    let d = tf.delta([*dx, *dy, *dz]);
                    for a in bounded_moves(d, *dyaw, cfg) {
                        emit(&mut world, &mut steps, DemoStep { action: a, anchor: s.anchor.clone() })?;
                    }
                }
                other => emit(&mut world, &mut steps, DemoStep { action: other.clone(), anchor: s.anchor.clone() })?,
            }
        }
    }
    let new_segments = segment_demo(&steps)?;
    if new_segments.len() != segment_poses.len() {
        return Err(Error::Invariant("retargeting changed the segment structure".into()));
    }
    Ok(Demonstration {
        variation_id: target.id.clone(),
        steps,
        segments: new_segments,
        segment_poses,
        start: demo.start,
        start_yaw: demo.start_yaw,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub variation_id: String,
    pub success: bool,
    pub steps: u32,
    pub events: Vec<(u32, Event)>,
    pub violations: Vec<String>,
}

/// Replays the demonstration open loop on `v`.
pub fn validate_trajectory(demo: &Demonstration, v: &Variation, cfg: &SimConfig) -> ReplayReport {
    let mut world = World::reset(v, cfg);
    let mut events = Vec::new();
    let mut violations = Vec::new();
    if let Some(n) = &world.premise_violation {
        violations.push(Error::GoalReferencesAbsent(n.clone()).to_string());
    }
    for (i, s) in demo.steps.iter().enumerate() {
        if let Action::MoveDelta { dx, dy, dz, dyaw } = s.action {
            let m = cfg.delta_max + 1e-12;
            if dx.abs() > m || dy.abs() > m || dz.abs() > m || dyaw.abs() > cfg.yaw_step_max + 1e-12 {
                violations.push(format!("step {i}: move exceeds the per-step bound"));
            }
        }
        let t = world.state.t;
        match world.step(&s.action) {
            Ok(ev) => {
                for e in ev {
                    if let Event::GraspAttempt { aborted: true, .. } = e {
                        violations.push(format!("step {i}: grasp closed on nothing"));
                    }
                    if let Event::GraspAttempt { valid: false, aborted: false, target } = &e {
                        violations.push(format!("step {i}: grasped {} which is not a target", target.as_deref().unwrap_or("?")));
                    }
                    events.push((t, e));
                }
            }
            Err(e) => {
                violations.push(format!("step {i}: {e}"));
                break;
            }
        }
    }
    ReplayReport {
        variation_id: v.id.clone(),
        success: world.episode_success(),
        steps: world.state.t,
        events,
        violations,
    }
}

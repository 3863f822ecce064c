use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::assets::{ArticulationSpec, NormalizedAsset};
use super::scenario::ScenarioInstance;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::geometry::{footprint, Rect};
use crate::math::{rotate2, yaw_difference};
use crate::seed;
use crate::types::{AttributeVector, ObjectGroup, Pose, Role, TaskTemplate};

/// What an object rests on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    #[default]
    Table,
    On(String),
    In(String),
    Held,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub instance_name: String,
    pub asset_uid: String,
    pub group_id: String,
    pub role: Role,
    pub pose: Pose,
    pub half_extents: [f64; 3],
    pub attribute_vector: AttributeVector,
    pub sampled_mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container_cavity: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub articulations: Vec<ArticulationSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    #[serde(default)]
    pub support: Support,
}

impl SceneObject {
    pub fn footprint(&self) -> Rect {
        footprint(&self.pose, self.half_extents)
    }

    pub fn is_fixed(&self) -> bool {
        !self.role.movable()
    }

    pub fn top(&self) -> f64 {
        self.pose.z + self.half_extents[2]
    }

    /// Footprint of the container's cavity, if any.
    pub fn cavity_footprint(&self) -> Option<Rect> {
        self.container_cavity.map(|c| footprint(&self.pose, c))
    }

    /// Height of the cavity floor.
    pub fn floor(&self) -> f64 {
        self.pose.z - self.half_extents[2]
    }

    /// Joint names qualified by the owning instance.
    pub fn joint_id(&self, joint: &str) -> String {
        alloc::format!("{}.{joint}", self.instance_name)
    }

    pub fn step_tag(&self) -> Option<u32> {
        self.tags.iter().find_map(|t| t.strip_prefix("step:").and_then(|n| n.parse().ok()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneLayout {
    pub objects: Vec<SceneObject>,
    pub workspace: Rect,
    pub reach_region: Rect,
    pub seed: u64,
}

impl SceneLayout {
    pub fn get(&self, name: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.instance_name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut SceneObject> {
        self.objects.iter_mut().find(|o| o.instance_name == name)
    }

    pub fn first_of_group(&self, group: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.group_id == group)
    }

    /// Free objects (resting on the table) whose footprints overlap more
    /// than `eps` along both axes.
    pub fn overlapping_pairs(&self, eps: f64) -> Vec<(String, String)> {
        let free: Vec<&SceneObject> = self.objects.iter().filter(|o| o.support == Support::Table).collect();
        let mut out = Vec::new();
        for (i, a) in free.iter().enumerate() {
            for b in &free[i + 1..] {
                if a.footprint().penetration(&b.footprint()) > eps {
                    out.push((a.instance_name.clone(), b.instance_name.clone()));
                }
            }
        }
        out
    }
}

fn role_of(group: &ObjectGroup, tags: &[String]) -> Role {
    tags.iter().find_map(|t| Role::from_tag(t)).or(group.role).unwrap_or_default()
}

/// World pose of a goal slot expressed relative to `reference`.
pub fn slot_pose(reference: &Pose, offset: [f64; 3]) -> Pose {
    let d = rotate2([offset[0], offset[1]], reference.yaw);
    Pose::new(reference.x + d[0], reference.y + d[1], 0.0, reference.yaw + offset[2])
}

/// Planar drop point for the `k`-th object placed into a cavity.
pub fn cavity_slot(container: &Pose, cavity: [f64; 3], k: usize) -> [f64; 2] {
    const SPREAD: [f64; 5] = [0.0, -0.5, 0.5, -0.25, 0.25];
    let d = rotate2([SPREAD[k % SPREAD.len()] * cavity[0], 0.0], container.yaw);
    [container.x + d[0], container.y + d[1]]
}

/// Keep-out squares around every goal slot whose reference is placed.
pub(crate) fn reserved_regions(t: &TaskTemplate, objects: &[SceneObject]) -> Vec<Rect> {
    const KEEP_OUT: f64 = 0.06;
    let mut out = Vec::new();
    for g in &t.object_groups {
        for s in &g.goal_slots {
            if let Some(r) = objects.iter().find(|o| o.group_id == s.reference) {
                out.push(Rect::centered(slot_pose(&r.pose, s.offset).xy(), [KEEP_OUT, KEEP_OUT]));
            }
        }
    }
    out
}

/// Whether `obj` at its current pose collides with anything already placed
/// or leaves the workspace.
pub(crate) fn placement_ok(obj: &SceneObject, placed: &[SceneObject], reserved: &[Rect], cfg: &SimConfig) -> bool {
    let fp = obj.footprint();
    if !cfg.workspace.contains_rect(&fp) {
        return false;
    }
    if placed
        .iter()
        .filter(|o| o.instance_name != obj.instance_name && o.support == Support::Table)
        .any(|o| o.footprint().penetration(&fp) > cfg.eps_pen)
    {
        return false;
    }
    obj.is_fixed() || reserved.iter().all(|r| r.penetration(&fp) <= cfg.eps_pen)
}

/// Rejection-samples a free pose for `obj` inside the reach region.
pub(crate) fn sample_pose(
    obj: &mut SceneObject,
    placed: &[SceneObject],
    reserved: &[Rect],
    cfg: &SimConfig,
    rng: &mut impl Rng,
) -> Result<()> {
    let reach = cfg.reach_region;
    for _ in 0..cfg.r_max {
        let x = rng.gen_range(reach.min[0]..=reach.max[0]);
        let y = rng.gen_range(reach.min[1]..=reach.max[1]);
        let yaw = yaw_difference(rng.gen_range(-PI..PI), 0.0);
        obj.pose = Pose::new(x, y, obj.half_extents[2], yaw);
        if placement_ok(obj, placed, reserved, cfg) {
            return Ok(());
        }
    }
    Err(Error::LayoutInfeasible(obj.instance_name.clone()))
}

/// Places every instance: anchored groups first at their slots, then the
/// rest by rejection sampling in template order.
pub fn layout_scene(
    s: &ScenarioInstance,
    t: &TaskTemplate,
    assets: &BTreeMap<String, NormalizedAsset>,
    cfg: &SimConfig,
    seed: u64,
) -> Result<SceneLayout> {
    let mut pending = Vec::new();
    for (gid, spec) in s.specs_in_order(t) {
        let group = t.group(gid).ok_or_else(|| Error::Invariant(alloc::format!("unknown group {gid}")))?;
        let a = assets.get(&spec.instance_name).ok_or_else(|| Error::NoAssetFound(spec.instance_name.clone()))?;
        pending.push(SceneObject {
            instance_name: spec.instance_name.clone(),
            asset_uid: a.uid.clone(),
            group_id: gid.to_string(),
            role: role_of(group, &spec.tags),
            pose: Pose::new(0.0, 0.0, a.half_extents[2], 0.0),
            half_extents: a.half_extents,
            attribute_vector: a.attribute_vector.clone(),
            sampled_mass: a.mass,
            container_cavity: a.container_cavity,
            articulations: a.articulations.clone(),
            tags: spec.tags.clone(),
            support: Support::Table,
        });
    }

    let mut placed: Vec<SceneObject> = Vec::new();
    let mut free = Vec::new();
    let mut slot_index: BTreeMap<String, usize> = BTreeMap::new();
    for mut obj in pending {
        let group = t.group(&obj.group_id).expect("checked above");
        let k = slot_index.entry(obj.group_id.clone()).or_insert(0);
        if let Some(slot) = group.anchor_slots.get(*k) {
            *k += 1;
            obj.pose = Pose::new(slot[0], slot[1], obj.half_extents[2], slot[2]);
            if !placement_ok(&obj, &placed, &[], cfg) {
                return Err(Error::LayoutInfeasible(obj.instance_name));
            }
            placed.push(obj);
        } else {
            free.push(obj);
        }
    }

    let reserved = reserved_regions(t, &placed);
    let mut rng = seed::rng(seed, "layout");
    for mut obj in free {
        sample_pose(&mut obj, &placed, &reserved, cfg, &mut rng)?;
        placed.push(obj);
    }

    let order: BTreeMap<&str, usize> =
        s.specs_in_order(t).enumerate().map(|(i, (_, spec))| (spec.instance_name.as_str(), i)).collect();
    placed.sort_by_key(|o| order[o.instance_name.as_str()]);
    Ok(SceneLayout { objects: placed, workspace: cfg.workspace, reach_region: cfg.reach_region, seed })
}

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::action::Event;
use super::world::{Gripper, LedgerEntry, World};
use crate::error::{Error, Result};
use crate::geometry::project_bbox;
use crate::goal::SubgoalKind;
use crate::instantiation::Support;
use crate::types::Pose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameObject {
    pub instance: String,
    pub category: String,
    pub pose: Pose,
    pub half_extents: [f64; 3],
    pub bbox: [f64; 4],
    pub support: Support,
    pub contained: bool,
}

/// The subgoal whose object is currently in the gripper.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSubgoal {
    pub id: String,
    pub verb: String,
    pub object: String,
    pub destination: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivilegedFrame {
    pub t: u32,
    pub objects: Vec<FrameObject>,
    /// Visible (not contained) objects per category.
    pub counts: BTreeMap<String, u32>,
    pub ledger: Vec<LedgerEntry>,
    pub gripper: Gripper,
    pub last_event: Option<Event>,
    pub active: Option<ActiveSubgoal>,
    pub terminated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise_violation: Option<String>,
}

impl PrivilegedFrame {
    pub fn object(&self, instance: &str) -> Option<&FrameObject> {
        self.objects.iter().find(|o| o.instance == instance)
    }
}

/// Readable form of a category or instance identifier.
pub fn display_name(s: &str) -> String {
    s.replace('_', " ")
}

fn active_subgoal(w: &World) -> Option<ActiveSubgoal> {
    let held = w.state.gripper.held.as_deref()?;
    let cat = |n: &str| w.state.objects.get(n).map(|o| display_name(&o.attribute_vector.category));
    for e in w.state.subgoal_ledger.iter().filter(|e| !e.done) {
        let Some(s) = w.goal.get(&e.subgoal_id) else { continue };
        if s.subject() != Some(held) {
            continue;
        }
        let (verb, dest) = match &s.kind {
            SubgoalKind::Contain { container, .. } => ("packing", container),
            SubgoalKind::AtPose { reference, .. } => ("placing", reference),
            SubgoalKind::StackOn { base, .. } => ("stacking", base),
            SubgoalKind::Articulation { .. } => continue,
        };
        return Some(ActiveSubgoal { id: s.id.clone(), verb: verb.into(), object: cat(held)?, destination: cat(dest)? });
    }
    None
}

pub fn make_frame(w: &World, last_event: Option<Event>) -> Result<PrivilegedFrame> {
    let mut objects = Vec::new();
    let mut counts = BTreeMap::new();
    for name in &w.scene_order {
        let Some(o) = w.state.objects.get(name) else { continue };
        let bbox = project_bbox(&o.pose, o.half_extents, &w.cfg.camera).map_err(|_| Error::BehindCamera)?;
        let contained = o.contained();
        if !contained {
            *counts.entry(o.attribute_vector.category.clone()).or_insert(0) += 1;
        }
        objects.push(FrameObject {
            instance: name.clone(),
            category: o.attribute_vector.category.clone(),
            pose: o.pose,
            half_extents: o.half_extents,
            bbox,
            support: o.support.clone(),
            contained,
        });
    }
    Ok(PrivilegedFrame {
        t: w.state.t,
        objects,
        counts,
        ledger: w.state.subgoal_ledger.clone(),
        gripper: w.state.gripper.clone(),
        last_event,
        active: active_subgoal(w),
        terminated: w.state.terminated,
        premise_violation: w.premise_violation.clone(),
    })
}

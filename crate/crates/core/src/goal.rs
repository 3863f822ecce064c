//! Goal specifications: one predicate family per constraint template.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::instantiation::{SceneLayout, SceneObject};
use crate::types::{ConstraintTemplate, Role, TaskTemplate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubgoalKind {
    Contain { instance: String, container: String },
    AtPose { instance: String, reference: String, offset: [f64; 3], pos_tol: f64, yaw_tol: f64 },
    StackOn { instance: String, base: String, min_overlap: f64 },
    Articulation { container: String, joint: String, value: f64, tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgoal {
    pub id: String,
    #[serde(flatten)]
    pub kind: SubgoalKind,
}

impl Subgoal {
    /// The object this subgoal moves, if any.
    pub fn subject(&self) -> Option<&str> {
        match &self.kind {
            SubgoalKind::Contain { instance, .. }
            | SubgoalKind::AtPose { instance, .. }
            | SubgoalKind::StackOn { instance, .. } => Some(instance),
            SubgoalKind::Articulation { .. } => None,
        }
    }

    /// Every instance the predicate reads.
    pub fn references(&self) -> Vec<&str> {
        match &self.kind {
            SubgoalKind::Contain { instance, container } => alloc::vec![instance.as_str(), container.as_str()],
            SubgoalKind::AtPose { instance, reference, .. } => alloc::vec![instance.as_str(), reference.as_str()],
            SubgoalKind::StackOn { instance, base, .. } => alloc::vec![instance.as_str(), base.as_str()],
            SubgoalKind::Articulation { container, .. } => alloc::vec![container.as_str()],
        }
    }

    pub fn contain(instance: &str, container: &str) -> Self {
        Self {
            id: format!("pack_{instance}"),
            kind: SubgoalKind::Contain { instance: instance.into(), container: container.into() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub constraint_template: ConstraintTemplate,
    pub subgoals: Vec<Subgoal>,
}

impl GoalSpec {
    pub fn get(&self, id: &str) -> Option<&Subgoal> {
        self.subgoals.iter().find(|s| s.id == id)
    }

    /// Instances that are valid grasp targets.
    pub fn targets(&self) -> BTreeSet<&str> {
        self.subgoals.iter().filter_map(Subgoal::subject).collect()
    }

    /// The subgoals that apply given which instances exist. Packing
    /// subgoals for absent instances drop out while at least one packing
    /// target remains; any other reference to an absent instance is an
    /// error.
    pub fn effective(&self, present: impl Fn(&str) -> bool) -> Result<Vec<&Subgoal>> {
        let any_packing_present = self
            .subgoals
            .iter()
            .any(|s| matches!(&s.kind, SubgoalKind::Contain { instance, .. } if present(instance)));
        let mut out = Vec::new();
        for s in &self.subgoals {
            if let SubgoalKind::Contain { instance, container } = &s.kind {
                if !present(container) {
                    return Err(Error::GoalReferencesAbsent(container.clone()));
                }
                if !present(instance) {
                    if any_packing_present {
                        continue;
                    }
                    return Err(Error::GoalReferencesAbsent(instance.clone()));
                }
            } else if let Some(r) = s.references().into_iter().find(|r| !present(r)) {
                return Err(Error::GoalReferencesAbsent(r.into()));
            }
            out.push(s);
        }
        Ok(out)
    }
}

fn targets_of<'a>(layout: &'a SceneLayout, group: &'a str) -> impl Iterator<Item = &'a SceneObject> + 'a {
    layout.objects.iter().filter(move |o| o.group_id == group && o.role == Role::Target)
}

fn first_instance<'a>(layout: &'a SceneLayout, group: &str) -> Result<&'a SceneObject> {
    layout.first_of_group(group).ok_or_else(|| Error::Invariant(format!("group {group} has no instances")))
}

/// Sorts by `step:<n>` tag, untagged last, keeping scene order otherwise.
fn by_step<'a>(mut v: Vec<&'a SceneObject>) -> Vec<&'a SceneObject> {
    v.sort_by_key(|o| o.step_tag().unwrap_or(u32::MAX));
    v
}

/// Derives the goal from template roles and the concrete scene.
pub fn build_goal(t: &TaskTemplate, layout: &SceneLayout, cfg: &SimConfig) -> Result<GoalSpec> {
    use ConstraintTemplate::*;
    let mut subgoals = Vec::new();
    match t.constraint_template {
        LoosePacking | ContainerLoading => {
            for g in &t.object_groups {
                let Some(dest) = &g.destination else { continue };
                let container = first_instance(layout, dest)?;
                for o in targets_of(layout, &g.group_id) {
                    subgoals.push(Subgoal::contain(&o.instance_name, &container.instance_name));
                }
            }
            for g in &t.object_groups {
                for (joint, value) in &g.articulation_goal {
                    let c = first_instance(layout, &g.group_id)?;
                    subgoals.push(Subgoal {
                        id: format!("set_{}_{joint}", c.instance_name),
                        kind: SubgoalKind::Articulation {
                            container: c.instance_name.clone(),
                            joint: c.joint_id(joint),
                            value: *value,
                            tol: cfg.articulation_tol,
                        },
                    });
                }
            }
        }
        PatternedArrangement | ConstrainedPositioning | PrecisionInsertion => {
            let (pos_tol, yaw_tol, prefix) = if t.constraint_template == PrecisionInsertion {
                (cfg.tau_p_ins, cfg.tau_y_ins(), "insert")
            } else {
                (cfg.tau_p, cfg.tau_y(), "place")
            };
            for g in &t.object_groups {
                if g.goal_slots.is_empty() {
                    continue;
                }
                for (k, o) in by_step(targets_of(layout, &g.group_id).collect()).into_iter().enumerate() {
                    let slot = g.goal_slots.get(k).ok_or_else(|| {
                        Error::Invariant(format!("group {} has more targets than goal slots", g.group_id))
                    })?;
                    let reference = first_instance(layout, &slot.reference)?;
                    subgoals.push(Subgoal {
                        id: format!("{prefix}_{}", o.instance_name),
                        kind: SubgoalKind::AtPose {
                            instance: o.instance_name.clone(),
                            reference: reference.instance_name.clone(),
                            offset: slot.offset,
                            pos_tol,
                            yaw_tol,
                        },
                    });
                }
            }
        }
        LogicalAssembly | RecursiveStacking => {
            for g in &t.object_groups {
                let Some(dest) = &g.destination else { continue };
                let mut base = first_instance(layout, dest)?.instance_name.clone();
                let layers = by_step(layout.objects.iter().filter(|o| o.role == Role::Target).collect());
                for o in layers {
                    subgoals.push(Subgoal {
                        id: format!("stack_{}", o.instance_name),
                        kind: SubgoalKind::StackOn {
                            instance: o.instance_name.clone(),
                            base: base.clone(),
                            min_overlap: cfg.tau_support,
                        },
                    });
                    base = o.instance_name.clone();
                }
                break;
            }
        }
    }
    if subgoals.is_empty() {
        return Err(Error::Invariant(format!("template {} yields an empty goal", t.meta.name)));
    }
    Ok(GoalSpec { constraint_template: t.constraint_template, subgoals })
}

/// Ordering implied by `step:<n>` tags on targets, if any are tagged.
pub fn tagged_order(goal: &GoalSpec, layout: &SceneLayout) -> Option<Vec<String>> {
    let mut tagged: Vec<(u32, &str)> = goal
        .subgoals
        .iter()
        .filter_map(|s| {
            let o = layout.get(s.subject()?)?;
            Some((o.step_tag()?, s.id.as_str()))
        })
        .collect();
    if tagged.is_empty() {
        return None;
    }
    tagged.sort();
    Some(tagged.into_iter().map(|(_, id)| String::from(id)).collect())
}

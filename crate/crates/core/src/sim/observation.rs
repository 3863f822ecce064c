use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::world::World;
use crate::instantiation::Support;
use crate::math::snap;
use crate::types::{ColorClass, ShapeClass, SizeClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    #[default]
    Full,
    Degraded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proprio {
    pub position: [f64; 3],
    pub yaw: f64,
    pub holding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedAttributes {
    pub color_class: ColorClass,
    pub shape_class: ShapeClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_class: Option<SizeClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedObject {
    pub handle: String,
    pub position: [f64; 3],
    pub yaw: f64,
    pub attributes: ObservedAttributes,
    pub movable: bool,
    pub receptacle: bool,
    pub contained: bool,
    pub held: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub instruction: String,
    pub proprio: Proprio,
    pub objects: Vec<ObservedObject>,
    /// Joint values by qualified joint name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub articulations: BTreeMap<String, f64>,
    pub fidelity: Fidelity,
}

impl Observation {
    pub fn get(&self, handle: &str) -> Option<&ObservedObject> {
        self.objects.iter().find(|o| o.handle == handle)
    }
}

/// What the policy sees. Degraded fidelity snaps positions to the grid and
/// keeps only color and shape.
pub fn make_observation(w: &World, fidelity: Fidelity) -> Observation {
    let g = &w.state.gripper;
    let grid = w.cfg.grid;
    let mut objects = Vec::new();
    for (i, name) in w.scene_order.iter().enumerate() {
        let Some(o) = w.state.objects.get(name) else { continue };
        let a = &o.attribute_vector;
        let mut position = o.pose.xyz();
        let mut attributes = ObservedAttributes {
            color_class: a.color_class,
            shape_class: a.shape_class,
            size_class: Some(a.size_class),
            category: Some(a.category.clone()),
        };
        if fidelity == Fidelity::Degraded {
            position = position.map(|v| snap(v, grid));
            attributes.size_class = None;
            attributes.category = None;
        }
        objects.push(ObservedObject {
            handle: format!("o{i}"),
            position,
            yaw: o.pose.yaw,
            attributes,
            movable: o.role.movable(),
            receptacle: o.container_cavity.is_some(),
            contained: o.contained(),
            held: o.support == Support::Held,
        });
    }
    Observation {
        instruction: w.instruction.clone(),
        proprio: Proprio { position: g.position, yaw: g.yaw, holding: g.held.is_some() },
        objects,
        articulations: w.state.articulations.clone(),
        fidelity,
    }
}

//! Domain vocabulary shared by every module: object specs, attributes,
//! poses, and task templates.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::math::normalize_yaw;

/// A closed interval `[min, max]`.
pub type Range = [f64; 2];

/// One object proposed by the scenario designer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub instance_name: String,
    #[serde(default)]
    pub description: String,
    pub asset_query: String,
    /// kg
    pub estimated_mass: Range,
    /// meters, largest dimension
    pub estimated_size: Range,
    #[serde(default)]
    pub tags: Vec<String>,
}

impl ObjectSpec {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }

    /// Ordering hint carried as a `step:<n>` tag.
    pub fn step_tag(&self) -> Option<u32> {
        self.tags
            .iter()
            .find_map(|t| t.strip_prefix("step:").and_then(|n| n.parse().ok()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationRule {
    InstanceNameEmpty,
    NonFinite,
    MassMinNonpositive,
    MassMinGtMax,
    SizeMinNonpositive,
    SizeMinGtMax,
}

impl ViolationRule {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::InstanceNameEmpty => "instance_name_empty",
            Self::NonFinite => "non_finite",
            Self::MassMinNonpositive => "mass_min_nonpositive",
            Self::MassMinGtMax => "mass_min_gt_max",
            Self::SizeMinNonpositive => "size_min_nonpositive",
            Self::SizeMinGtMax => "size_min_gt_max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: ViolationRule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.field, self.rule.as_str())
    }
}

fn check_interval(field: &str, r: Range, nonpos: ViolationRule, inverted: ViolationRule, out: &mut Vec<Violation>) {
    if !r[0].is_finite() || !r[1].is_finite() {
        out.push(Violation { field: field.into(), rule: ViolationRule::NonFinite });
        return;
    }
    if r[0] <= 0.0 {
        out.push(Violation { field: field.into(), rule: nonpos });
    }
    if r[0] > r[1] {
        out.push(Violation { field: field.into(), rule: inverted });
    }
}

/// Lists every invariant the spec breaks. Violations are values, not errors.
pub fn validate_object_spec(spec: &ObjectSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    if spec.instance_name.trim().is_empty() {
        out.push(Violation { field: "instance_name".into(), rule: ViolationRule::InstanceNameEmpty });
    }
    check_interval(
        "estimated_mass",
        spec.estimated_mass,
        ViolationRule::MassMinNonpositive,
        ViolationRule::MassMinGtMax,
        &mut out,
    );
    check_interval(
        "estimated_size",
        spec.estimated_size,
        ViolationRule::SizeMinNonpositive,
        ViolationRule::SizeMinGtMax,
        &mut out,
    );
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorClass {
    Red,
    Blue,
    Green,
    Yellow,
    Brown,
    White,
    Black,
    Gray,
    Other,
}

impl ColorClass {
    pub const ALL: [ColorClass; 9] = [
        Self::Red,
        Self::Blue,
        Self::Green,
        Self::Yellow,
        Self::Brown,
        Self::White,
        Self::Black,
        Self::Gray,
        Self::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Red => "red",
            Self::Blue => "blue",
            Self::Green => "green",
            Self::Yellow => "yellow",
            Self::Brown => "brown",
            Self::White => "white",
            Self::Black => "black",
            Self::Gray => "gray",
            Self::Other => "other",
        }
    }

    /// Parses an instruction word; `other` is never named in language.
    pub fn from_word(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| *c != Self::Other && c.as_str() == word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeClass {
    Box,
    Cylinder,
    Sphere,
    Flat,
    Irregular,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 5] = [Self::Box, Self::Cylinder, Self::Sphere, Self::Flat, Self::Irregular];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub const SMALL_BELOW: f64 = 0.07;
    pub const LARGE_FROM: f64 = 0.15;

    /// Bins the midpoint of an estimated size interval.
    pub fn from_midpoint(mid: f64) -> Self {
        if mid < Self::SMALL_BELOW {
            Self::Small
        } else if mid < Self::LARGE_FROM {
            Self::Medium
        } else {
            Self::Large
        }
    }

    pub fn from_range(size: Range) -> Self {
        Self::from_midpoint(0.5 * (size[0] + size[1]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttributeVector {
    pub color_class: ColorClass,
    pub shape_class: ShapeClass,
    pub size_class: SizeClass,
    pub category: String,
}

/// Number of matching fields among color, shape, size, and category.
pub fn attribute_similarity(a: &AttributeVector, b: &AttributeVector) -> u8 {
    u8::from(a.color_class == b.color_class)
        + u8::from(a.shape_class == b.shape_class)
        + u8::from(a.size_class == b.size_class)
        + u8::from(a.category == b.category)
}

/// Planar pose in the table frame; orientation is yaw only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self { x, y, z, yaw: normalize_yaw(yaw) }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn xyz(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintTemplate {
    PatternedArrangement,
    LoosePacking,
    ConstrainedPositioning,
    ContainerLoading,
    LogicalAssembly,
    PrecisionInsertion,
    RecursiveStacking,
}

impl ConstraintTemplate {
    pub const ALL: [ConstraintTemplate; 7] = [
        Self::PatternedArrangement,
        Self::LoosePacking,
        Self::ConstrainedPositioning,
        Self::ContainerLoading,
        Self::LogicalAssembly,
        Self::PrecisionInsertion,
        Self::RecursiveStacking,
    ];
}

/// What an object is for in the scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[default]
    Target,
    Distractor,
    Container,
    Fixture,
}

impl Role {
    pub fn movable(self) -> bool {
        matches!(self, Self::Target | Self::Distractor)
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "target" => Some(Self::Target),
            "distractor" => Some(Self::Distractor),
            "container" => Some(Self::Container),
            "fixture" => Some(Self::Fixture),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskMeta {
    pub name: String,
    pub task_description: String,
}

/// Goal slot for one target, expressed relative to the first instance of a
/// reference group: `[dx, dy, dyaw]` in the reference frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSlot {
    pub reference: String,
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectGroup {
    pub group_id: String,
    pub description: String,
    pub allowed_types: Vec<String>,
    pub count_range: [u32; 2],
    /// Default role for the group's instances; `tags` on an instance win.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    /// Fixed placements `[x, y, yaw]`, consumed in instance order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchor_slots: Vec<[f64; 3]>,
    /// Goal slots for positioning templates, consumed in target order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub goal_slots: Vec<GoalSlot>,
    /// Group whose first instance receives this group's targets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<String>,
    /// Required final joint values, for articulated containers.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub articulation_goal: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskTemplate {
    pub meta: TaskMeta,
    pub constraint_template: ConstraintTemplate,
    pub object_groups: Vec<ObjectGroup>,
}

impl TaskTemplate {
    pub fn group(&self, id: &str) -> Option<&ObjectGroup> {
        self.object_groups.iter().find(|g| g.group_id == id)
    }
}

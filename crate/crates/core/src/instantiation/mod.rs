//! From abstract templates to concrete scenes: parsing, scenario sources,
//! asset retrieval and normalization, and seeded layout.

mod assets;
mod layout;
mod scenario;
mod schema;
mod template;

pub use assets::{
    normalize_asset, parse_override, resolve_assets, ArticulationSpec, AssetOverride, AssetRecord, Axis,
    NormalizedAsset,
};
pub(crate) use layout::{placement_ok, reserved_regions, sample_pose};
pub use layout::{cavity_slot, layout_scene, slot_pose, SceneLayout, SceneObject, Support};
pub use scenario::{
    instantiate_task, parse_scenarios, render_prompt, validate_scenario, ScenarioInstance, ScenarioRule,
    ScenarioSource, ScenarioViolation,
};
pub use template::{check_template, parse_template};

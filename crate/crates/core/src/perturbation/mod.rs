//! Diagnostic variations of base tasks and the suites built from them.

mod ops;
mod recompose;
mod suite;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use ops::{
    apply_adversarial_substitution, apply_perturbation, apply_recomposition, apply_spatial_shift,
    apply_state_intervention, extrapolate_temporal, reinstruct, InitialState, ShiftMode, TemporalMode,
};
pub use recompose::recompose_primitives;
pub use suite::{generate_suite, ManifestEntry, SuiteConfig, SuiteEntry, SuiteManifest};

use crate::config::SimConfig;
use crate::error::Result;
use crate::goal::{build_goal, tagged_order, GoalSpec};
use crate::instantiation::SceneLayout;
use crate::types::TaskTemplate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    SpatialLayoutShift,
    PrimitiveRecomposition,
    AdversarialObjectPerturbation,
    TemporalExtrapolation,
    StateIntervention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub axis: Axis,
    pub params: serde_json::Value,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    pub id: String,
    pub base_task_id: String,
    pub template: TaskTemplate,
    /// Every perturbation applied since the base task, oldest first.
    pub perturbation: Vec<PerturbationSpec>,
    pub scene: SceneLayout,
    pub instruction: String,
    pub goal: GoalSpec,
    pub required_order: Option<Vec<String>>,
    pub train_eval_tag: Split,
    /// Variation ids whose demonstrations count as training data for
    /// policies evaluated on this one.
    #[serde(default)]
    pub train_set: Vec<String>,
}

impl Variation {
    /// An unperturbed task: goal from template roles, order from step tags.
    pub fn base(id: &str, template: &TaskTemplate, instruction: &str, scene: SceneLayout, cfg: &SimConfig) -> Result<Self> {
        let goal = build_goal(template, &scene, cfg)?;
        let required_order = tagged_order(&goal, &scene);
        Ok(Self {
            id: id.into(),
            base_task_id: id.into(),
            template: template.clone(),
            perturbation: Vec::new(),
            scene,
            instruction: instruction.into(),
            goal,
            required_order,
            train_eval_tag: Split::Train,
            train_set: Vec::new(),
        })
    }

    /// Subgoal ids in the order a demonstrator completes them: the
    /// required order first, then the rest in goal order.
    pub fn demonstration_order(&self) -> Vec<String> {
        let mut out: Vec<String> = self.required_order.clone().unwrap_or_default();
        for s in &self.goal.subgoals {
            if !out.contains(&s.id) {
                out.push(s.id.clone());
            }
        }
        out
    }
}

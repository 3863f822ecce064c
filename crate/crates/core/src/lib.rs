//! Core of the tabletop diagnostic harness.
//!
//! Everything in this crate is a pure function of its inputs (plus explicit
//! seeds) and builds under `no_std` with `alloc`. File formats, transports,
//! and the command line live in the `tabletop` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod amplifier;
pub mod config;
pub mod episode;
pub mod error;
pub mod geometry;
pub mod goal;
pub mod instantiation;
pub mod math;
pub mod metrics;
pub mod perturbation;
pub mod policy;
pub mod seed;
pub mod sim;
pub mod types;
pub mod vqa;

pub use config::SimConfig;
pub use error::{Error, Result};
pub use goal::{GoalSpec, Subgoal, SubgoalKind};
pub use instantiation::{SceneLayout, SceneObject, ScenarioInstance};
pub use perturbation::Variation;
pub use types::{AttributeVector, ConstraintTemplate, ObjectSpec, Pose, TaskTemplate};

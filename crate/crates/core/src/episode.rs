//! Episode logs: one header, the reset frame, one record per step and an
//! end record, stored as JSON lines.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::sim::{Action, Event, Fidelity, PrivilegedFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Success,
    Failure,
    Timeout,
    PolicyTimeout,
    PolicyError,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::Failure => "failure",
            Self::Timeout => "timeout",
            Self::PolicyTimeout => "policy_timeout",
            Self::PolicyError => "policy_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub variation_id: String,
    pub base_task_id: String,
    pub policy_id: String,
    pub seed: u64,
    pub fidelity: Fidelity,
    pub instruction: String,
    pub config: SimConfig,
    /// Subgoals that apply in this scene, and the order required of them.
    pub effective: Vec<String>,
    pub required_order: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise_violation: Option<String>,
    pub pre_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u32,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
    pub events: Vec<Event>,
    pub frame: PrivilegedFrame,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstGrasp {
    pub instance: String,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEnd {
    pub reason: Termination,
    pub success: bool,
    pub steps: u32,
    pub first_grasp: Option<FirstGrasp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: EpisodeHeader,
    pub reset: PrivilegedFrame,
    pub steps: Vec<StepRecord>,
    pub end: EpisodeEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header(EpisodeHeader),
    Reset { frame: PrivilegedFrame },
    Step(StepRecord),
    End(EpisodeEnd),
}

/// Grasp attempt as logged: target, validity, and whether it closed on air.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraspRecord {
    pub t: u32,
    pub target: Option<String>,
    pub valid: bool,
    pub aborted: bool,
}

impl EpisodeLog {
    pub fn events(&self) -> impl Iterator<Item = (u32, &Event)> {
        self.steps.iter().flat_map(|s| s.events.iter().map(move |e| (s.t, e)))
    }

    pub fn grasps(&self) -> Vec<GraspRecord> {
        self.events()
            .filter_map(|(t, e)| match e {
                Event::GraspAttempt { target, valid, aborted } => {
                    Some(GraspRecord { t, target: target.clone(), valid: *valid, aborted: *aborted })
                }
                _ => None,
            })
            .collect()
    }

    /// Every frame in order, starting with the reset frame.
    pub fn frames(&self) -> impl Iterator<Item = &PrivilegedFrame> {
        core::iter::once(&self.reset).chain(self.steps.iter().map(|s| &s.frame))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |r: &Record| {
            out.push_str(&serde_json::to_string(r).expect("log records serialize"));
            out.push('\n');
        };
        push(&Record::Header(self.header.clone()));
        push(&Record::Reset { frame: self.reset.clone() });
        for s in &self.steps {
            push(&Record::Step(s.clone()));
        }
        push(&Record::End(self.end.clone()));
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut header = None;
        let mut reset = None;
        let mut steps = Vec::new();
        let mut end = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let r: Record = serde_json::from_str(line)
                .map_err(|e| Error::Schema { path: alloc::format!("line {}", i + 1), reason: e.to_string() })?;
            match r {
                Record::Header(h) => header = Some(h),
                Record::Reset { frame } => reset = Some(frame),
                Record::Step(s) => steps.push(s),
                Record::End(e) => end = Some(e),
            }
        }
        let missing = |what: &str| Error::Schema { path: "$".into(), reason: alloc::format!("missing {what} record") };
        Ok(Self {
            header: header.ok_or_else(|| missing("header"))?,
            reset: reset.ok_or_else(|| missing("reset"))?,
            steps,
            end: end.ok_or_else(|| missing("end"))?,
        })
    }
}

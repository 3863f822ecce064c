//! Question-answer pairs derived only from privileged frames, so every
//! answer can be regenerated and checked.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::episode::EpisodeLog;
use crate::error::{Error, Result};
use crate::sim::{display_name, PrivilegedFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VqaCategory {
    Grounding,
    Counting,
    Tracking,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRef {
    pub episode: String,
    pub t: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VqaItem {
    pub question: String,
    pub answer: String,
    pub category: VqaCategory,
    pub frame_ref: FrameRef,
    /// Paths of the frame fields the answer was read from.
    pub grounded_fields: Vec<String>,
}

fn frame_ref(episode: &str, frame: &PrivilegedFrame) -> FrameRef {
    FrameRef { episode: episode.into(), t: frame.t }
}

/// How a frame object is named in questions: its category when that is
/// unambiguous in the frame, else its instance name.
fn description(frame: &PrivilegedFrame, instance: &str) -> Option<String> {
    let o = frame.object(instance)?;
    let same = frame.objects.iter().filter(|x| x.category == o.category).count();
    Some(display_name(if same == 1 { &o.category } else { instance }))
}

pub fn format_bbox(b: [f64; 4]) -> String {
    format!("[{:.1}, {:.1}, {:.1}, {:.1}]", b[0], b[1], b[2], b[3])
}

pub fn gen_grounding(episode: &str, frame: &PrivilegedFrame, instance: &str) -> Result<VqaItem> {
    let o = frame.object(instance).ok_or_else(|| Error::UnknownInstance(instance.into()))?;
    let desc = description(frame, instance).unwrap_or_default();
    Ok(VqaItem {
        question: format!("What is the bounding box of the {desc}?"),
        answer: format_bbox(o.bbox),
        category: VqaCategory::Grounding,
        frame_ref: frame_ref(episode, frame),
        grounded_fields: alloc::vec![format!("objects.{instance}.bbox")],
    })
}

/// Visible (not contained) objects of `category`.
pub fn gen_counting(episode: &str, frame: &PrivilegedFrame, category: &str) -> VqaItem {
    let n = frame.objects.iter().filter(|o| o.category == category && !o.contained).count();
    VqaItem {
        question: format!("How many {} objects are there on the table?", display_name(category)),
        answer: n.to_string(),
        category: VqaCategory::Counting,
        frame_ref: frame_ref(episode, frame),
        grounded_fields: alloc::vec![format!("counts.{category}")],
    }
}

pub fn gen_tracking(episode: &str, frame: &PrivilegedFrame) -> VqaItem {
    let answer = if frame.terminated {
        "The robot has finished the task.".to_string()
    } else if let Some(a) = &frame.active {
        match a.verb.as_str() {
            "packing" => format!("The robot is packing {} into the {} container.", a.object, a.destination),
            "placing" => format!("The robot is placing {} at the {}.", a.object, a.destination),
            verb => format!("The robot is {verb} {} on the {}.", a.object, a.destination),
        }
    } else {
        "The robot is idle.".to_string()
    };
    VqaItem {
        question: "What is the robot doing?".into(),
        answer,
        category: VqaCategory::Tracking,
        frame_ref: frame_ref(episode, frame),
        grounded_fields: alloc::vec!["terminated".into(), "active".into()],
    }
}

/// True iff regenerating the item from `frame` reproduces it exactly.
pub fn verify_item(item: &VqaItem, episode: &str, frame: &PrivilegedFrame) -> bool {
    if item.frame_ref != frame_ref(episode, frame) {
        return false;
    }
    let field = item.grounded_fields.first().map(String::as_str).unwrap_or("");
    let regenerated = match item.category {
        VqaCategory::Grounding => {
            let Some(inst) = field.strip_prefix("objects.").and_then(|s| s.strip_suffix(".bbox")) else { return false };
            match gen_grounding(episode, frame, inst) {
                Ok(i) => i,
                Err(_) => return false,
            }
        }
        VqaCategory::Counting => {
            let Some(cat) = field.strip_prefix("counts.") else { return false };
            gen_counting(episode, frame, cat)
        }
        VqaCategory::Tracking => gen_tracking(episode, frame),
    };
    &regenerated == item
}

/// Frames worth annotating: the first, every frame carrying an event, and
/// the last.
pub fn sample_frames(log: &EpisodeLog) -> Vec<&PrivilegedFrame> {
    let frames: Vec<&PrivilegedFrame> = log.frames().collect();
    let last = frames.len() - 1;
    frames
        .iter()
        .enumerate()
        .filter(|(i, f)| *i == 0 || *i == last || f.last_event.is_some())
        .map(|(_, f)| *f)
        .collect()
}

/// Every item for one frame: a box per object, a count per category, and
/// the tracking question.
pub fn frame_items(episode: &str, frame: &PrivilegedFrame) -> Vec<VqaItem> {
    let mut out = Vec::new();
    for o in &frame.objects {
        if let Ok(i) = gen_grounding(episode, frame, &o.instance) {
            out.push(i);
        }
    }
    let cats: BTreeSet<&str> = frame.objects.iter().map(|o| o.category.as_str()).collect();
    for c in cats {
        out.push(gen_counting(episode, frame, c));
    }
    out.push(gen_tracking(episode, frame));
    out
}

pub fn generate_items(episode: &str, log: &EpisodeLog) -> Vec<VqaItem> {
    sample_frames(log).into_iter().flat_map(|f| frame_items(episode, f)).collect()
}

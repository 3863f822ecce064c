use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::goal::SubgoalKind;
use crate::instantiation::Support;
use crate::perturbation::Variation;
use crate::types::{ColorClass, Role, ShapeClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Destination {
    Into { category: String },
    At { reference: String, offset: [f64; 3] },
    OnTop { category: String },
}

/// One demonstration as the scripted policies remember it: which
/// categories were handled in which order, and where they stood.
#[derive(Debug, Clone, PartialEq)]
pub struct MemorizedDemo {
    pub categories: Vec<String>,
    pub positions: Vec<[f64; 3]>,
}

/// Statistics a scripted policy "learned" from its training variations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingPrior {
    pub demos: Vec<MemorizedDemo>,
    /// Instruction word to the slot its target occupied.
    pub keywords: BTreeMap<String, Slot>,
    /// Visible target counts at the start of each subgoal, with the
    /// category handled next.
    pub counts: Vec<(BTreeMap<String, u32>, String)>,
    pub target_categories: BTreeSet<String>,
    pub prototypes: BTreeSet<(ColorClass, ShapeClass)>,
    /// Color and shape of each target category, for when categories are
    /// not observable.
    pub looks: BTreeMap<String, (ColorClass, ShapeClass)>,
    pub destination: Option<Destination>,
}

pub fn words(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(|w| w.to_lowercase()).collect()
}

fn category(v: &Variation, instance: &str) -> Option<String> {
    v.scene.get(instance).map(|o| o.attribute_vector.category.clone())
}

impl TrainingPrior {
    pub fn learn(train: &[&Variation]) -> Self {
        let mut p = Self::default();
        let mut ambiguous = BTreeSet::new();
        for v in train {
            for s in &v.goal.subgoals {
                let Some(subject) = s.subject() else { continue };
                let Some(o) = v.scene.get(subject) else { continue };
                p.target_categories.insert(o.attribute_vector.category.clone());
                let look = (o.attribute_vector.color_class, o.attribute_vector.shape_class);
                p.prototypes.insert(look);
                p.looks.entry(o.attribute_vector.category.clone()).or_insert(look);
                if p.destination.is_none() {
                    p.destination = match &s.kind {
                        SubgoalKind::Contain { container, .. } => {
                            category(v, container).map(|category| Destination::Into { category })
                        }
                        SubgoalKind::AtPose { reference, offset, .. } => {
                            category(v, reference).map(|reference| Destination::At { reference, offset: *offset })
                        }
                        SubgoalKind::StackOn { base, .. } => {
                            category(v, base).map(|category| Destination::OnTop { category })
                        }
                        SubgoalKind::Articulation { .. } => None,
                    };
                }
            }

            let order: Vec<&str> = v
                .demonstration_order()
                .iter()
                .filter_map(|id| v.goal.get(id).and_then(|s| s.subject()))
                .filter(|n| v.scene.get(n).is_some())
                .map(|n| v.scene.get(n).unwrap().instance_name.as_str())
                .collect();
            p.demos.push(MemorizedDemo {
                categories: order.iter().filter_map(|n| category(v, n)).collect(),
                positions: order.iter().map(|n| v.scene.get(n).unwrap().pose.xyz()).collect(),
            });

            let subjects: Vec<&str> = v.goal.subgoals.iter().filter_map(|s| s.subject()).collect();
            if let [only] = subjects.as_slice() {
                if let Some(slot) = slot_of(v, only) {
                    for w in words(&v.instruction) {
                        match p.keywords.get(&w) {
                            Some(s) if *s != slot => {
                                ambiguous.insert(w);
                            }
                            _ => {
                                p.keywords.insert(w, slot);
                            }
                        }
                    }
                }
            }
        }
        for w in &ambiguous {
            p.keywords.remove(w);
        }

        for v in train {
            let mut visible: BTreeMap<String, u32> = p.target_categories.iter().map(|c| (c.clone(), 0)).collect();
            for o in &v.scene.objects {
                if !matches!(o.support, Support::In(_)) {
                    if let Some(n) = visible.get_mut(&o.attribute_vector.category) {
                        *n += 1;
                    }
                }
            }
            for id in v.demonstration_order() {
                let Some(cat) = v.goal.get(&id).and_then(|s| s.subject()).and_then(|n| category(v, n)) else {
                    continue;
                };
                p.counts.push((visible.clone(), cat.clone()));
                if let Some(n) = visible.get_mut(&cat) {
                    *n = n.saturating_sub(1);
                }
            }
        }
        p
    }

    /// The category to handle next given visible counts: an exact match
    /// if one was seen, else the nearest entry in L1 distance.
    pub fn next_by_counts(&self, visible: &BTreeMap<String, u32>) -> Option<&str> {
        let dist = |k: &BTreeMap<String, u32>| -> u32 {
            let keys: BTreeSet<&String> = k.keys().chain(visible.keys()).collect();
            keys.into_iter()
                .map(|c| k.get(c).copied().unwrap_or(0).abs_diff(visible.get(c).copied().unwrap_or(0)))
                .sum()
        };
        let mut best: Option<(u32, &str)> = None;
        for (k, cat) in &self.counts {
            let d = dist(k);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, cat));
            }
        }
        best.map(|(_, c)| c)
    }

    /// The most common first category, then the first demo starting with
    /// it.
    pub fn habitual_demo(&self) -> Option<&MemorizedDemo> {
        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        for d in &self.demos {
            if let Some(c) = d.categories.first() {
                *freq.entry(c).or_insert(0) += 1;
            }
        }
        let mut top: Option<(&str, usize)> = None;
        for d in &self.demos {
            let Some(c) = d.categories.first() else { continue };
            let n = freq[c.as_str()];
            if top.is_none_or(|(_, tn)| n > tn) {
                top = Some((c, n));
            }
        }
        let (start, _) = top?;
        self.demos.iter().find(|d| d.categories.first().map(String::as_str) == Some(start))
    }
}

/// Upper or lower among the movable objects of the target's group.
fn slot_of(v: &Variation, target: &str) -> Option<Slot> {
    let t = v.scene.get(target)?;
    let peers: Vec<f64> = v
        .scene
        .objects
        .iter()
        .filter(|o| o.group_id == t.group_id && matches!(o.role, Role::Target | Role::Distractor))
        .map(|o| o.pose.y)
        .collect();
    if peers.len() < 2 {
        return None;
    }
    let max = peers.iter().copied().fold(f64::MIN, f64::max);
    let min = peers.iter().copied().fold(f64::MAX, f64::min);
    if t.pose.y >= max {
        Some(Slot::Upper)
    } else if t.pose.y <= min {
        Some(Slot::Lower)
    } else {
        None
    }
}

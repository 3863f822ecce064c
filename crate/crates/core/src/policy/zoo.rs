use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::motion::{Motion, MotionStep};
use super::prior::{words, Destination, MemorizedDemo, Slot, TrainingPrior};
use super::{EpisodeContext, Policy, PolicyInput};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::goal::SubgoalKind;
use crate::instantiation::{cavity_slot, slot_pose, Support};
use crate::math::dist3;
use crate::sim::{Action, ObservedObject, Observation, World};
use crate::types::{ColorClass, Pose};

pub const BUILTIN_NAMES: [&str; 8] = [
    "oracle",
    "lexical_shortcut",
    "layout_bias",
    "conflict_halt",
    "behavioral_inertia",
    "causal_confusion",
    "blind_grasp",
    "semantic_match",
];

pub fn builtin(name: &str) -> Result<Box<dyn Policy + Send>> {
    Ok(match name {
        "oracle" => Box::new(Oracle::default()),
        "lexical_shortcut" => Box::new(Scripted::new(name, Lexical::default())),
        "layout_bias" => Box::new(Scripted::new(name, LayoutBias::default())),
        "conflict_halt" => Box::new(Scripted::new(name, ConflictHalt::default())),
        "behavioral_inertia" => Box::new(Scripted::new(name, Inertia::default())),
        "causal_confusion" => Box::new(Scripted::new(name, CountCue::default())),
        "blind_grasp" => Box::new(Scripted::new(name, Nearest { semantic: false, ..Nearest::default() })),
        "semantic_match" => Box::new(Scripted::new(name, Nearest { semantic: true, ..Nearest::default() })),
        _ => return Err(Error::UnknownPolicy(name.into())),
    })
}

const PLAN_ATTEMPTS: usize = 4;

/// Plans with full access to the world: the goal, the ledger and exact
/// poses.
#[derive(Default)]
struct Oracle {
    motion: Motion,
    cfg: SimConfig,
}

impl Oracle {
    fn plan(&mut self, w: &World, obs: &Observation) -> bool {
        let ledger = &w.state.subgoal_ledger;
        let open = |id: &String| ledger.iter().any(|e| &e.subgoal_id == id && !e.done);
        let next = w.required_order.iter().chain(w.effective.iter()).find(|id| open(id));
        let Some(s) = next.and_then(|id| w.goal.get(id)) else { return false };
        let cfg = &self.cfg;
        let objects = &w.state.objects;
        match &s.kind {
            SubgoalKind::Contain { instance, container } => {
                let c = &objects[container];
                if !w.state.accessible(container, cfg.open_threshold) {
                    for j in &c.joints {
                        if w.state.articulations[j] < cfg.open_threshold {
                            self.motion.push(MotionStep::Joint { joint: j.clone(), value: 1.0 }, Some(container));
                        }
                    }
                    return true;
                }
                let inside = objects.values().filter(|o| o.support == Support::In(container.clone())).count();
                let to = cavity_slot(&c.pose, c.container_cavity.unwrap_or([0.0; 3]), inside);
                let o = &objects[instance];
                self.motion.pick_place(cfg, obs, o.pose.xyz(), o.pose.yaw, to, None, instance, container);
            }
            SubgoalKind::AtPose { instance, reference, offset, .. } => {
                let slot = slot_pose(&objects[reference].pose, *offset);
                let o = &objects[instance];
                self.motion.pick_place(cfg, obs, o.pose.xyz(), o.pose.yaw, slot.xy(), Some(slot.yaw), instance, reference);
            }
            SubgoalKind::StackOn { instance, base, .. } => {
                let b = &objects[base];
                let o = &objects[instance];
                self.motion.pick_place(cfg, obs, o.pose.xyz(), o.pose.yaw, b.pose.xy(), Some(b.pose.yaw), instance, base);
            }
            SubgoalKind::Articulation { container, joint, value, .. } => {
                self.motion.push(MotionStep::Joint { joint: joint.clone(), value: *value }, Some(container));
            }
        }
        true
    }
}

impl Policy for Oracle {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn begin(&mut self, ctx: &EpisodeContext<'_>) -> Result<()> {
        self.cfg = ctx.cfg.clone();
        self.motion = Motion::default();
        Ok(())
    }

    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Action> {
        for _ in 0..PLAN_ATTEMPTS {
            if let Some(a) = self.motion.next(input.observation, &self.cfg) {
                return Ok(a);
            }
            if !self.plan(input.world, input.observation) {
                return Ok(Action::Terminate);
            }
        }
        Ok(Action::NoOp)
    }

    fn annotation(&self) -> Option<String> {
        self.motion.anchor()
    }
}

enum Plan {
    Queued,
    Freeze,
    Done,
}

/// Shared view of the observation for the scripted policies.
struct View<'a> {
    obs: &'a Observation,
    prior: &'a TrainingPrior,
}

impl<'a> View<'a> {
    fn is(&self, o: &ObservedObject, category: &str) -> bool {
        match &o.attributes.category {
            Some(c) => c == category,
            None => self
                .prior
                .looks
                .get(category)
                .is_some_and(|l| *l == (o.attributes.color_class, o.attributes.shape_class)),
        }
    }

    fn on_table(&self) -> impl Iterator<Item = &'a ObservedObject> {
        self.obs.objects.iter().filter(|o| o.movable && !o.contained && !o.held)
    }

    /// Objects that look like something the policy was trained to move.
    fn candidates(&self) -> impl Iterator<Item = &'a ObservedObject> + '_ {
        self.on_table().filter(move |o| match &o.attributes.category {
            Some(c) => self.prior.target_categories.contains(c),
            None => self.prior.prototypes.contains(&(o.attributes.color_class, o.attributes.shape_class)),
        })
    }

    fn find(&self, category: &str, pred: impl Fn(&ObservedObject) -> bool) -> Option<&'a ObservedObject> {
        self.obs.objects.iter().find(|o| pred(o) && self.is(o, category))
    }

    /// Drop point, optional final object yaw, and destination handle.
    fn destination(&self) -> Option<([f64; 2], Option<f64>, String)> {
        match self.prior.destination.as_ref()? {
            Destination::Into { category } => {
                let c = self.find(category, |o| o.receptacle).or_else(|| self.obs.objects.iter().find(|o| o.receptacle))?;
                Some(([c.position[0], c.position[1]], None, c.handle.clone()))
            }
            Destination::At { reference, offset } => {
                let r = self
                    .find(reference, |o| !o.movable)
                    .or_else(|| self.obs.objects.iter().find(|o| !o.movable && !o.receptacle))?;
                let slot = slot_pose(&Pose::new(r.position[0], r.position[1], 0.0, r.yaw), *offset);
                Some((slot.xy(), Some(slot.yaw), r.handle.clone()))
            }
            Destination::OnTop { category } => {
                let b = self.find(category, |_| true)?;
                Some(([b.position[0], b.position[1]], Some(b.yaw), b.handle.clone()))
            }
        }
    }

    fn counts(&self) -> BTreeMap<String, u32> {
        self.prior
            .target_categories
            .iter()
            .map(|c| (c.clone(), self.on_table().filter(|o| self.is(o, c)).count() as u32))
            .collect()
    }
}

/// Queues a pick of `o` and a drop at the learned destination.
fn pick_to_destination(v: &View<'_>, m: &mut Motion, cfg: &SimConfig, o: &ObservedObject) -> bool {
    let Some((to, yaw, dest)) = v.destination() else { return false };
    m.pick_place(cfg, v.obs, o.position, o.yaw, to, yaw, &o.handle, &dest);
    true
}

trait Brain {
    fn reset(&mut self);
    fn plan(&mut self, v: &View<'_>, m: &mut Motion, cfg: &SimConfig) -> Plan;
}

struct Scripted<B> {
    name: &'static str,
    brain: B,
    motion: Motion,
    prior: TrainingPrior,
    cfg: SimConfig,
}

impl<B: Brain> Scripted<B> {
    fn new(name: &str, brain: B) -> Self {
        let name = BUILTIN_NAMES.iter().find(|n| **n == name).copied().unwrap_or("scripted");
        Self { name, brain, motion: Motion::default(), prior: TrainingPrior::default(), cfg: SimConfig::default() }
    }
}

impl<B: Brain> Policy for Scripted<B> {
    fn name(&self) -> String {
        self.name.to_string()
    }

    fn begin(&mut self, ctx: &EpisodeContext<'_>) -> Result<()> {
        self.prior = if ctx.train.is_empty() {
            TrainingPrior::learn(&[ctx.variation])
        } else {
            TrainingPrior::learn(&ctx.train)
        };
        self.cfg = ctx.cfg.clone();
        self.motion = Motion::default();
        self.brain.reset();
        Ok(())
    }

    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Action> {
        let view = View { obs: input.observation, prior: &self.prior };
        for _ in 0..PLAN_ATTEMPTS {
            if let Some(a) = self.motion.next(input.observation, &self.cfg) {
                return Ok(a);
            }
            match self.brain.plan(&view, &mut self.motion, &self.cfg) {
                Plan::Queued => {}
                Plan::Freeze => return Ok(Action::NoOp),
                Plan::Done => return Ok(Action::Terminate),
            }
        }
        Ok(Action::NoOp)
    }

    fn annotation(&self) -> Option<String> {
        self.motion.anchor()
    }
}

fn extreme<'a>(objs: impl Iterator<Item = &'a ObservedObject>, slot: Slot) -> Option<&'a ObservedObject> {
    let mut best: Option<&ObservedObject> = None;
    for o in objs {
        let better = match (best, slot) {
            (None, _) => true,
            (Some(b), Slot::Upper) => o.position[1] > b.position[1],
            (Some(b), Slot::Lower) => o.position[1] < b.position[1],
        };
        if better {
            best = Some(o);
        }
    }
    best
}

/// Instruction word to slot, straight from the training table.
fn lexical_slot(v: &View<'_>) -> Option<Slot> {
    words(&v.obs.instruction).iter().find_map(|w| v.prior.keywords.get(w).copied())
}

/// The object the instruction actually describes: a color word picks by
/// color, a spatial word by position.
fn grounded<'a>(v: &View<'a>) -> Option<&'a ObservedObject> {
    for w in words(&v.obs.instruction) {
        if let Some(c) = ColorClass::from_word(&w) {
            let hits: Vec<&ObservedObject> = v.candidates().filter(|o| o.attributes.color_class == c).collect();
            if let [one] = hits.as_slice() {
                return Some(one);
            }
        }
        let slot = match w.as_str() {
            "top" | "upper" => Some(Slot::Upper),
            "bottom" | "lower" => Some(Slot::Lower),
            _ => None,
        };
        if let Some(s) = slot {
            return extreme(v.candidates(), s);
        }
    }
    None
}

/// Moves the object at the slot its instruction keyword was trained on.
#[derive(Default)]
struct Lexical {
    done: bool,
}

impl Brain for Lexical {
    fn reset(&mut self) {
        self.done = false;
    }

    fn plan(&mut self, v: &View<'_>, m: &mut Motion, cfg: &SimConfig) -> Plan {
        if self.done {
            return Plan::Done;
        }
        self.done = true;
        let pick = match lexical_slot(v) {
            Some(s) => extreme(v.candidates(), s),
            None => v.candidates().next(),
        };
        match pick {
            Some(o) if pick_to_destination(v, m, cfg, o) => Plan::Queued,
            _ => Plan::Done,
        }
    }
}

/// Always moves the uppermost candidate.
#[derive(Default)]
struct LayoutBias {
    done: bool,
}

impl Brain for LayoutBias {
    fn reset(&mut self) {
        self.done = false;
    }

    fn plan(&mut self, v: &View<'_>, m: &mut Motion, cfg: &SimConfig) -> Plan {
        if self.done {
            return Plan::Done;
        }
        self.done = true;
        match extreme(v.candidates(), Slot::Upper) {
            Some(o) if pick_to_destination(v, m, cfg, o) => Plan::Queued,
            _ => Plan::Done,
        }
    }
}

/// Acts like the lexical policy unless the grounded target disagrees,
/// in which case it stops moving for good.
#[derive(Default)]
struct ConflictHalt {
    done: bool,
    frozen: bool,
}

impl Brain for ConflictHalt {
    fn reset(&mut self) {
        *self = Self::default();
    }

    fn plan(&mut self, v: &View<'_>, m: &mut Motion, cfg: &SimConfig) -> Plan {
        if self.frozen {
            return Plan::Freeze;
        }
        if self.done {
            return Plan::Done;
        }
        let lexical = lexical_slot(v).and_then(|s| extreme(v.candidates(), s));
        let visual = grounded(v);
        let pick = match (lexical, visual) {
            (Some(a), Some(b)) if a.handle != b.handle => {
                self.frozen = true;
                return Plan::Freeze;
            }
            (Some(a), _) => Some(a),
            (None, b) => b,
        };
        self.done = true;
        match pick {
            Some(o) if pick_to_destination(v, m, cfg, o) => Plan::Queued,
            _ => Plan::Done,
        }
    }
}

enum Seen<'a> {
    OnTable(&'a ObservedObject),
    Contained,
    Absent,
}

fn seen<'a>(v: &View<'a>, category: &str) -> Seen<'a> {
    if let Some(o) = v.on_table().find(|o| v.is(o, category)) {
        Seen::OnTable(o)
    } else if v.obs.objects.iter().any(|o| o.contained && v.is(o, category)) {
        Seen::Contained
    } else {
        Seen::Absent
    }
}

/// Replays the habitual demonstration step by step, trusting its own
/// progress counter over what it sees.
#[derive(Default)]
struct Inertia {
    k: usize,
    frozen: bool,
}

impl Brain for Inertia {
    fn reset(&mut self) {
        *self = Self::default();
    }

    fn plan(&mut self, v: &View<'_>, m: &mut Motion, cfg: &SimConfig) -> Plan {
        if self.frozen {
            return Plan::Freeze;
        }
        let Some(demo): Option<&MemorizedDemo> = v.prior.habitual_demo() else { return Plan::Done };
        while self.k < demo.categories.len() {
            let k = self.k;
            match seen(v, &demo.categories[k]) {
                Seen::OnTable(o) => {
                    self.k += 1;
                    return if pick_to_destination(v, m, cfg, o) { Plan::Queued } else { Plan::Done };
                }
                Seen::Absent if k == 0 => self.k += 1,
                Seen::Absent => {
                    m.reach_and_grasp(cfg, v.obs, demo.positions[k]);
                    self.k += 1;
                    return Plan::Queued;
                }
                Seen::Contained if k > 0 => self.k += 1,
                Seen::Contained => {
                    self.k = demo.categories.len();
                    let Some(next) = demo.categories.get(1) else { return Plan::Done };
                    return match seen(v, next) {
                        Seen::OnTable(_) => {
                            self.frozen = true;
                            Plan::Freeze
                        }
                        Seen::Absent => {
                            m.reach_and_grasp(cfg, v.obs, demo.positions[1]);
                            Plan::Queued
                        }
                        Seen::Contained => Plan::Done,
                    };
                }
            }
        }
        Plan::Done
    }
}

/// Chooses what to pack next from how many of each target are visible.
#[derive(Default)]
struct CountCue;

impl Brain for CountCue {
    fn reset(&mut self) {}

    fn plan(&mut self, v: &View<'_>, m: &mut Motion, cfg: &SimConfig) -> Plan {
        let counts = v.counts();
        if counts.values().all(|n| *n == 0) {
            return Plan::Done;
        }
        let Some(cat) = v.prior.next_by_counts(&counts) else { return Plan::Done };
        match v.on_table().find(|o| v.is(o, cat)) {
            Some(o) if pick_to_destination(v, m, cfg, o) => Plan::Queued,
            _ => Plan::Done,
        }
    }
}

/// Packs the nearest remaining object, either any object at all or only
/// those matching a target's appearance.
#[derive(Default)]
struct Nearest {
    semantic: bool,
    attempted: BTreeSet<String>,
}

impl Brain for Nearest {
    fn reset(&mut self) {
        self.attempted.clear();
    }

    fn plan(&mut self, v: &View<'_>, m: &mut Motion, cfg: &SimConfig) -> Plan {
        let g = v.obs.proprio.position;
        let pool: Vec<&ObservedObject> = if self.semantic { v.candidates().collect() } else { v.on_table().collect() };
        let mut best: Option<(&ObservedObject, f64)> = None;
        for o in pool.into_iter().filter(|o| !self.attempted.contains(&o.handle)) {
            let d = dist3(g, o.position);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((o, d));
            }
        }
        let Some((o, _)) = best else { return Plan::Done };
        self.attempted.insert(o.handle.clone());
        if pick_to_destination(v, m, cfg, o) {
            Plan::Queued
        } else {
            Plan::Done
        }
    }
}

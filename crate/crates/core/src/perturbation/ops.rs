use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::recompose::recompose_primitives;
use super::{Axis, PerturbationSpec, Variation};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::goal::{build_goal, tagged_order, Subgoal, SubgoalKind};
use crate::instantiation::{cavity_slot, placement_ok, reserved_regions, sample_pose, AssetRecord, SceneObject, Support};
use crate::seed;
use crate::sim::display_name;
use crate::types::{attribute_similarity, Pose, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    SwapPositions,
    RelocateUniform,
    ReorderRelative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalMode {
    Chain(Vec<String>),
    Repeat { category: String, count: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    OnTable,
    InContainer,
    Absent,
}

fn record(v: &mut Variation, axis: Axis, params: Value, seed: u64) {
    v.perturbation.push(PerturbationSpec { axis, params, seed });
}

fn movable_targets(v: &Variation) -> Vec<String> {
    v.scene.objects.iter().filter(|o| o.role == Role::Target).map(|o| o.instance_name.clone()).collect()
}

fn check_placements(v: &Variation, names: &[String], cfg: &SimConfig) -> Result<()> {
    let reserved = reserved_regions(&v.template, &v.scene.objects);
    let goal_targets = v.goal.targets();
    for n in names {
        let o = v.scene.get(n).expect("name taken from scene");
        if o.support != Support::Table {
            continue;
        }
        let keep_out: &[_] = if goal_targets.contains(n.as_str()) { &[] } else { &reserved };
        if !placement_ok(o, &v.scene.objects, keep_out, cfg) {
            return Err(Error::LayoutInfeasible(n.clone()));
        }
    }
    Ok(())
}

fn set_planar(o: &mut SceneObject, x: f64, y: f64, yaw: f64) {
    o.pose = Pose::new(x, y, o.half_extents[2], yaw);
}

/// Moves targets per `mode`; instruction and goal are untouched.
pub fn apply_spatial_shift(
    v: &Variation,
    mode: ShiftMode,
    include_distractors: bool,
    seed: u64,
    cfg: &SimConfig,
) -> Result<Variation> {
    let targets = movable_targets(v);
    if targets.is_empty() {
        return Err(Error::Precondition("scene has no movable target".into()));
    }
    let mut out = v.clone();
    let movable: Vec<String> = v
        .scene
        .objects
        .iter()
        .filter(|o| o.role.movable() && o.support == Support::Table)
        .map(|o| o.instance_name.clone())
        .collect();
    let moved: Vec<String> = match mode {
        ShiftMode::SwapPositions => {
            let distractors = movable.iter().filter(|n| !targets.contains(n));
            let pair: Vec<String> = targets.iter().chain(distractors).take(2).cloned().collect();
            if pair.len() < 2 {
                return Err(Error::Precondition("swap needs two movable objects".into()));
            }
            let (a, b) = (v.scene.get(&pair[0]).unwrap().pose, v.scene.get(&pair[1]).unwrap().pose);
            set_planar(out.scene.get_mut(&pair[0]).unwrap(), b.x, b.y, b.yaw);
            set_planar(out.scene.get_mut(&pair[1]).unwrap(), a.x, a.y, a.yaw);
            pair
        }
        ShiftMode::ReorderRelative => {
            let mut names = movable.clone();
            names.sort();
            if names.len() < 2 {
                return Err(Error::Precondition("reorder needs two movable objects".into()));
            }
            let poses: Vec<Pose> = names.iter().map(|n| v.scene.get(n).unwrap().pose).collect();
            for (i, n) in names.iter().enumerate() {
                let p = poses[(i + 1) % poses.len()];
                set_planar(out.scene.get_mut(n).unwrap(), p.x, p.y, p.yaw);
            }
            names
        }
        ShiftMode::RelocateUniform => {
            let chosen: Vec<String> = movable
                .iter()
                .filter(|n| include_distractors || targets.contains(n))
                .cloned()
                .collect();
            let reserved = reserved_regions(&v.template, &v.scene.objects);
            let mut rng = seed::rng(seed, "relocate");
            let mut kept: Vec<SceneObject> =
                out.scene.objects.iter().filter(|o| !chosen.contains(&o.instance_name)).cloned().collect();
            let goal_targets = v.goal.targets();
            for n in &chosen {
                let mut o = out.scene.get(n).unwrap().clone();
                let keep_out: &[_] = if goal_targets.contains(n.as_str()) { &[] } else { &reserved };
                sample_pose(&mut o, &kept, keep_out, cfg, &mut rng)?;
                *out.scene.get_mut(n).unwrap() = o.clone();
                kept.push(o);
            }
            out.scene.seed = seed;
            Vec::new()
        }
    };
    check_placements(&out, &moved, cfg)?;
    let mode_name = serde_json::to_value(mode).unwrap_or(Value::Null);
    record(&mut out, Axis::SpatialLayoutShift, json!({"mode": mode_name, "include_distractors": include_distractors}), seed);
    Ok(out)
}

/// Re-targets the instruction: the named instances become targets, the
/// other movable instances of their groups become distractors, and the
/// goal is rebuilt from the template.
pub fn reinstruct(v: &Variation, instruction: &str, targets: &[String], cfg: &SimConfig) -> Result<Variation> {
    let mut out = v.clone();
    let mut groups = BTreeSet::new();
    for t in targets {
        let o = v.scene.get(t).ok_or_else(|| Error::Precondition(format!("unknown instance {t}")))?;
        if !o.role.movable() {
            return Err(Error::Precondition(format!("{t} is not movable")));
        }
        groups.insert(o.group_id.clone());
    }
    for o in &mut out.scene.objects {
        if groups.contains(&o.group_id) && o.role.movable() {
            o.role = if targets.contains(&o.instance_name) { Role::Target } else { Role::Distractor };
        }
    }
    out.goal = build_goal(&out.template, &out.scene, cfg)?;
    out.required_order = tagged_order(&out.goal, &out.scene);
    out.instruction = instruction.into();
    Ok(out)
}

fn subgoal_for<'a>(v: &'a Variation, instance: &str) -> Result<&'a Subgoal> {
    v.goal
        .subgoals
        .iter()
        .find(|s| s.subject() == Some(instance))
        .ok_or_else(|| Error::Precondition(format!("{instance} is not a goal subject")))
}

fn category(v: &Variation, instance: &str) -> String {
    v.scene.get(instance).map_or_else(|| display_name(instance), |o| display_name(&o.attribute_vector.category))
}

/// Imperative phrase for one subgoal, used when rewriting instructions.
fn phrase(v: &Variation, s: &Subgoal) -> String {
    match &s.kind {
        SubgoalKind::Contain { instance, container } => {
            format!("put the {} into the {}", category(v, instance), category(v, container))
        }
        SubgoalKind::AtPose { instance, reference, .. } => {
            format!("place the {} at the {}", category(v, instance), category(v, reference))
        }
        SubgoalKind::StackOn { instance, base, .. } => {
            format!("stack the {} on the {}", category(v, instance), category(v, base))
        }
        SubgoalKind::Articulation { container, value, .. } => {
            let verb = if *value >= 0.5 { "open" } else { "close" };
            format!("{verb} the {}", category(v, container))
        }
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

fn sequence_instruction(v: &Variation, ids: &[String]) -> String {
    let parts: Vec<String> = ids.iter().filter_map(|id| v.goal.get(id)).map(|s| phrase(v, s)).collect();
    format!("{}.", capitalize(&parts.join(", then ")))
}

/// Restricts the goal to `order` (instance names), which becomes the
/// required order; other goal subjects turn into distractors.
pub fn apply_ordered_subset(v: &Variation, order: &[String]) -> Result<Variation> {
    let mut out = v.clone();
    let mut keep = Vec::new();
    for inst in order {
        keep.push(subgoal_for(v, inst)?.clone());
    }
    let dropped: Vec<String> = v
        .goal
        .subgoals
        .iter()
        .filter_map(Subgoal::subject)
        .filter(|s| !order.iter().any(|o| o == s))
        .map(String::from)
        .collect();
    for o in &mut out.scene.objects {
        if dropped.contains(&o.instance_name) {
            o.role = Role::Distractor;
        }
    }
    let ids: Vec<String> = keep.iter().map(|s| s.id.clone()).collect();
    let rest: Vec<Subgoal> = v.goal.subgoals.iter().filter(|s| s.subject().is_none()).cloned().collect();
    out.goal.subgoals = keep.into_iter().chain(rest).collect();
    out.instruction = sequence_instruction(&out, &ids);
    out.required_order = Some(ids);
    Ok(out)
}

/// Builds the novel-composition variation: the recomposed order over the
/// training symbols (instance names).
pub fn apply_recomposition(v: &Variation, train_orders: &[Vec<String>], seed: u64) -> Result<Variation> {
    let alphabet: BTreeSet<String> = train_orders.iter().flatten().cloned().collect();
    let order = recompose_primitives(train_orders, &alphabet)?;
    let mut out = apply_ordered_subset(v, &order)?;
    record(&mut out, Axis::PrimitiveRecomposition, json!({"train_orders": train_orders, "order": order}), seed);
    Ok(out)
}

/// Swaps a target for a look-alike of another category at the same pose,
/// scaled to fit inside the original footprint.
/// The substitute is a distractor; the instruction is unchanged.
pub fn apply_adversarial_substitution(
    v: &Variation,
    target: &str,
    catalog: &[AssetRecord],
    k_min: u8,
    seed: u64,
    cfg: &SimConfig,
) -> Result<Variation> {
    let orig = v.scene.get(target).ok_or_else(|| Error::Precondition(format!("unknown instance {target}")))?;
    let a = &orig.attribute_vector;
    let mut cands: Vec<&AssetRecord> = catalog
        .iter()
        .filter(|r| r.attribute_vector.category != a.category && attribute_similarity(a, &r.attribute_vector) >= k_min)
        .collect();
    cands.sort_by(|x, y| x.uid.cmp(&y.uid));
    let rec = *cands.first().ok_or_else(|| Error::NoAdversarialCandidate(target.into()))?;

    let mut out = v.clone();
    let remaining: Vec<Subgoal> = v.goal.subgoals.iter().filter(|s| s.subject() != Some(target)).cloned().collect();
    if !remaining.iter().any(|s| s.subject().is_some()) {
        return Err(Error::Precondition(format!("{target} is the only target")));
    }
    let k = f64::min(orig.half_extents[0] / rec.nominal_half_extents[0], orig.half_extents[1] / rec.nominal_half_extents[1]);
    let half = rec.nominal_half_extents.map(|h| h * k);
    let name = format!("{target}__{}", rec.attribute_vector.category);
    let sub = SceneObject {
        instance_name: name.clone(),
        asset_uid: rec.uid.clone(),
        group_id: orig.group_id.clone(),
        role: Role::Distractor,
        pose: Pose::new(orig.pose.x, orig.pose.y, half[2], orig.pose.yaw),
        half_extents: half,
        attribute_vector: rec.attribute_vector.clone(),
        sampled_mass: orig.sampled_mass,
        container_cavity: None,
        articulations: Vec::new(),
        tags: Vec::new(),
        support: orig.support.clone(),
    };
    *out.scene.get_mut(target).unwrap() = sub;
    out.goal.subgoals = remaining;
    if let Some(order) = &mut out.required_order {
        order.retain(|id| out.goal.get(id).is_some());
    }
    check_placements(&out, &[name.clone()], cfg)?;
    record(
        &mut out,
        Axis::AdversarialObjectPerturbation,
        json!({"target": target, "k_min": k_min, "substitute": name, "uid": rec.uid}),
        seed,
    );
    Ok(out)
}

fn new_subgoal(v: &Variation, id: &str) -> Result<Subgoal> {
    let inst = id
        .strip_prefix("pack_")
        .ok_or_else(|| Error::Precondition(format!("cannot derive subgoal {id}")))?;
    if v.scene.get(inst).is_none() {
        return Err(Error::Precondition(format!("{id} references unknown instance {inst}")));
    }
    let container = v
        .goal
        .subgoals
        .iter()
        .find_map(|s| match &s.kind {
            SubgoalKind::Contain { container, .. } => Some(container.clone()),
            _ => None,
        })
        .or_else(|| v.scene.objects.iter().find(|o| o.container_cavity.is_some()).map(|o| o.instance_name.clone()))
        .ok_or_else(|| Error::Precondition("scene has no container".into()))?;
    Ok(Subgoal::contain(inst, &container))
}

/// Lengthens the horizon by chaining subgoals or repeating an object.
pub fn extrapolate_temporal(v: &Variation, mode: &TemporalMode, seed: u64, cfg: &SimConfig) -> Result<Variation> {
    let mut out = v.clone();
    let mut order = v.required_order.clone().unwrap_or_else(|| v.goal.subgoals.iter().map(|s| s.id.clone()).collect());
    let params;
    match mode {
        TemporalMode::Chain(ids) => {
            if ids.is_empty() {
                return Err(Error::Precondition("empty chain".into()));
            }
            let mut phrases = Vec::new();
            for id in ids {
                if order.contains(id) {
                    return Err(Error::Precondition(format!("{id} is already required")));
                }
                let s = match out.goal.get(id) {
                    Some(s) => s.clone(),
                    None => {
                        let s = new_subgoal(&out, id)?;
                        let subject = s.subject().unwrap_or_default().to_string();
                        if let Some(o) = out.scene.get_mut(&subject) {
                            o.role = Role::Target;
                        }
                        out.goal.subgoals.push(s.clone());
                        s
                    }
                };
                phrases.push(phrase(&out, &s));
                order.push(id.clone());
            }
            let base = out.instruction.trim_end_matches('.').to_string();
            out.instruction = format!("{base}, then {}.", phrases.join(", then "));
            params = json!({"chain": ids});
        }
        TemporalMode::Repeat { category, count } => {
            if *count < 2 {
                return Err(Error::Precondition("repeat count must be at least 2".into()));
            }
            let proto = out
                .scene
                .objects
                .iter()
                .find(|o| o.role == Role::Target && &o.attribute_vector.category == category)
                .cloned()
                .ok_or_else(|| Error::Precondition(format!("no target of category {category}")))?;
            let proto_goal = subgoal_for(v, &proto.instance_name)?.clone();
            let reserved = reserved_regions(&out.template, &out.scene.objects);
            let mut rng = seed::rng(seed, "repeat");
            for k in 2..=*count {
                let mut dup = proto.clone();
                dup.instance_name = format!("{}_{k}", proto.instance_name);
                dup.support = Support::Table;
                sample_pose(&mut dup, &out.scene.objects, &reserved, cfg, &mut rng)?;
                let mut s = proto_goal.clone();
                rename_subject(&mut s, &dup.instance_name);
                order.push(s.id.clone());
                out.goal.subgoals.push(s);
                out.scene.objects.push(dup);
            }
            let base = out.instruction.trim_end_matches('.').to_string();
            out.instruction = format!("{base}, including all the {}s.", display_name(category));
            params = json!({"repeat": {"category": category, "count": count}});
        }
    }
    out.required_order = Some(order);
    record(&mut out, Axis::TemporalExtrapolation, params, seed);
    Ok(out)
}

fn rename_subject(s: &mut Subgoal, name: &str) {
    let prefix = s.id.split('_').next().unwrap_or("pack").to_string();
    s.id = format!("{prefix}_{name}");
    match &mut s.kind {
        SubgoalKind::Contain { instance, .. }
        | SubgoalKind::AtPose { instance, .. }
        | SubgoalKind::StackOn { instance, .. } => *instance = name.into(),
        SubgoalKind::Articulation { .. } => {}
    }
}

fn container_for(v: &Variation, instance: &str) -> Option<String> {
    v.goal
        .subgoals
        .iter()
        .find_map(|s| match &s.kind {
            SubgoalKind::Contain { instance: i, container } if i == instance => Some(container.clone()),
            _ => None,
        })
        .or_else(|| {
            v.goal.subgoals.iter().find_map(|s| match &s.kind {
                SubgoalKind::Contain { container, .. } => Some(container.clone()),
                _ => None,
            })
        })
        .or_else(|| v.scene.objects.iter().find(|o| o.container_cavity.is_some()).map(|o| o.instance_name.clone()))
}

/// Sets initial conditions per instance. The goal is left alone; what an
/// intervention means is decided at evaluation time.
pub fn apply_state_intervention(
    v: &Variation,
    per_instance: &BTreeMap<String, InitialState>,
    seed: u64,
) -> Result<Variation> {
    for n in per_instance.keys() {
        if v.scene.get(n).is_none() {
            return Err(Error::Precondition(format!("unknown instance {n}")));
        }
    }
    let mut out = v.clone();
    let mut slot_in: BTreeMap<String, usize> = BTreeMap::new();
    for (n, st) in per_instance {
        match st {
            InitialState::OnTable => {}
            InitialState::Absent => out.scene.objects.retain(|o| &o.instance_name != n),
            InitialState::InContainer => {
                let c = container_for(v, n).ok_or_else(|| Error::Precondition(format!("no container for {n}")))?;
                let cont = v.scene.get(&c).unwrap().clone();
                let cav = cont.container_cavity.unwrap_or([0.0; 3]);
                let k = slot_in.entry(c.clone()).or_insert(0);
                let [x, y] = cavity_slot(&cont.pose, cav, *k);
                *k += 1;
                let o = out.scene.get_mut(n).unwrap();
                o.pose = Pose::new(x, y, cont.floor() + o.half_extents[2], o.pose.yaw);
                o.support = Support::In(c);
            }
        }
    }
    let params: BTreeMap<&String, Value> =
        per_instance.iter().map(|(k, v)| (k, serde_json::to_value(v).unwrap_or(Value::Null))).collect();
    record(&mut out, Axis::StateIntervention, json!({ "per_instance": params }), seed);
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShiftParams {
    #[serde(default)]
    mode: Option<ShiftMode>,
    #[serde(default)]
    include_distractors: bool,
    #[serde(default)]
    instruction: Option<String>,
    #[serde(default)]
    targets: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecomposeParams {
    #[serde(default)]
    train_orders: Option<Vec<Vec<String>>>,
    #[serde(default)]
    order: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdversarialParams {
    target: String,
    #[serde(default = "default_k_min")]
    k_min: u8,
}

fn default_k_min() -> u8 {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemporalParams {
    #[serde(default)]
    chain: Option<Vec<String>>,
    #[serde(default)]
    repeat: Option<RepeatParams>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RepeatParams {
    category: String,
    count: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterventionParams {
    per_instance: BTreeMap<String, InitialState>,
}

fn params<T: serde::de::DeserializeOwned>(axis: Axis, p: &Value) -> Result<T> {
    serde_json::from_value(p.clone()).map_err(|e| Error::Schema { path: format!("params ({axis:?})"), reason: e.to_string() })
}

/// Applies one spec whose `params` follow the per-axis schema.
pub fn apply_perturbation(v: &Variation, spec: &PerturbationSpec, catalog: &[AssetRecord], cfg: &SimConfig) -> Result<Variation> {
    match spec.axis {
        Axis::SpatialLayoutShift => {
            let p: ShiftParams = params(spec.axis, &spec.params)?;
            let mut out = match p.mode {
                Some(mode) => apply_spatial_shift(v, mode, p.include_distractors, spec.seed, cfg)?,
                None => {
                    let mut out = v.clone();
                    record(&mut out, Axis::SpatialLayoutShift, Value::Null, spec.seed);
                    out
                }
            };
            if let Some(instr) = &p.instruction {
                let targets = p.targets.clone().unwrap_or_else(|| movable_targets(&out));
                out = reinstruct(&out, instr, &targets, cfg)?;
            }
            out.perturbation.last_mut().expect("recorded above").params = spec.params.clone();
            Ok(out)
        }
        Axis::PrimitiveRecomposition => {
            let p: RecomposeParams = params(spec.axis, &spec.params)?;
            match (p.train_orders, p.order) {
                (Some(train), None) => apply_recomposition(v, &train, spec.seed),
                (None, Some(order)) => {
                    let mut out = apply_ordered_subset(v, &order)?;
                    record(&mut out, spec.axis, spec.params.clone(), spec.seed);
                    Ok(out)
                }
                _ => Err(Error::Schema {
                    path: "params (PrimitiveRecomposition)".into(),
                    reason: "expected exactly one of train_orders, order".into(),
                }),
            }
        }
        Axis::AdversarialObjectPerturbation => {
            let p: AdversarialParams = params(spec.axis, &spec.params)?;
            apply_adversarial_substitution(v, &p.target, catalog, p.k_min, spec.seed, cfg)
        }
        Axis::TemporalExtrapolation => {
            let p: TemporalParams = params(spec.axis, &spec.params)?;
            let mode = match (p.chain, p.repeat) {
                (Some(c), None) => TemporalMode::Chain(c),
                (None, Some(r)) => TemporalMode::Repeat { category: r.category, count: r.count },
                _ => {
                    return Err(Error::Schema {
                        path: "params (TemporalExtrapolation)".into(),
                        reason: "expected exactly one of chain, repeat".into(),
                    })
                }
            };
            extrapolate_temporal(v, &mode, spec.seed, cfg)
        }
        Axis::StateIntervention => {
            let p: InterventionParams = params(spec.axis, &spec.params)?;
            apply_state_intervention(v, &p.per_instance, spec.seed)
        }
    }
}

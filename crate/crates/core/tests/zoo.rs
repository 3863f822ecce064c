mod common;

use serde_json::json;
use tabletop_core::episode::EpisodeLog;
use tabletop_core::metrics::dgr;
use tabletop_core::perturbation::{apply_perturbation, Axis, PerturbationSpec};
use tabletop_core::policy::{builtin, BUILTIN_NAMES};
use tabletop_core::sim::{Fidelity, World};
use tabletop_core::{SimConfig, Variation};

fn swapped(v: &Variation) -> Variation {
    let spec = PerturbationSpec { axis: Axis::SpatialLayoutShift, params: json!({"mode": "swap_positions"}), seed: 1 };
    apply_perturbation(v, &spec, &common::catalog(), &SimConfig::default()).unwrap()
}

#[test]
fn every_builtin_instantiates() {
    for name in BUILTIN_NAMES {
        assert_eq!(builtin(name).unwrap().name(), *name);
    }
    assert!(builtin("nobody").is_err());
}

#[test]
fn layout_bias_takes_the_uppermost_mug() {
    let base = common::base("coffee", 7);
    for v in [base.clone(), swapped(&base)] {
        let top = v
            .scene
            .objects
            .iter()
            .filter(|o| o.group_id == "mugs")
            .max_by(|a, b| a.pose.y.total_cmp(&b.pose.y))
            .unwrap();
        let log = common::run("layout_bias", &v, &[&base], Fidelity::Full, 0);
        assert_eq!(log.end.first_grasp.unwrap().instance, top.instance_name);
    }
}

#[test]
fn blind_grasp_starts_with_the_nearest_loose_object() {
    let cfg = SimConfig::default();
    let v = common::base("tidy", 7);
    let world = World::reset(&v, &cfg);
    let g = world.state.gripper.position;
    let nearest = world
        .state
        .objects
        .iter()
        .filter(|(name, _)| v.scene.get(name).is_some_and(|o| !o.is_fixed() && o.container_cavity.is_none()))
        .map(|(name, o)| {
            let d = (o.pose.x - g[0]).powi(2) + (o.pose.y - g[1]).powi(2) + (o.pose.z - g[2]).powi(2);
            (d, name.clone())
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
        .1;
    let log = common::run("blind_grasp", &v, &[&v], Fidelity::Full, 0);
    assert_eq!(log.end.first_grasp.unwrap().instance, nearest);
}

#[test]
fn oracle_never_grasps_a_distractor() {
    let v = common::base("tidy", 7);
    let logs: Vec<_> = (0..3).map(|s| common::run("oracle", &v, &[&v], Fidelity::Degraded, s)).collect();
    let refs: Vec<_> = logs.iter().collect();
    let r = dgr(&refs);
    assert_eq!(r.numerator, 0);
    assert!(r.denominator >= 9);
}

#[test]
fn episode_logs_round_trip_through_jsonl() {
    let v = common::base("fastfood", 7);
    for name in ["oracle", "behavioral_inertia", "semantic_match"] {
        let log = common::run(name, &v, &[&v], Fidelity::Degraded, 4);
        let text = log.to_jsonl();
        assert_eq!(text.lines().count(), log.steps.len() + 3);
        assert_eq!(EpisodeLog::from_jsonl(&text).unwrap(), log);
    }
    assert!(EpisodeLog::from_jsonl("{}\n").is_err());
}

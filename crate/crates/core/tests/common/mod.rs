#![allow(dead_code)]

use std::collections::BTreeMap;

use tabletop_core::instantiation::{layout_scene, normalize_asset, parse_scenarios, parse_template, resolve_assets, AssetRecord};
use tabletop_core::policy::{builtin, run_episode, EpisodeContext, Limits};
use tabletop_core::sim::Fidelity;
use tabletop_core::{episode::EpisodeLog, seed, SimConfig, TaskTemplate, Variation};

macro_rules! data {
    ($p:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../harness/data/", $p))
    };
}

pub fn template_text(key: &str) -> &'static str {
    match key {
        "coffee" => data!("templates/coffee.template.json"),
        "fastfood" => data!("templates/fastfood.template.json"),
        "tidy" => data!("templates/tidy.template.json"),
        "plates" => data!("templates/plates.template.json"),
        _ => panic!("no template {key}"),
    }
}

pub fn scenario_text(key: &str) -> &'static str {
    match key {
        "coffee" => data!("fixtures/coffee/7.scenario.json"),
        "fastfood" => data!("fixtures/fastfood/7.scenario.json"),
        "tidy" => data!("fixtures/tidy/7.scenario.json"),
        "plates" => data!("fixtures/plates/7.scenario.json"),
        _ => panic!("no fixture {key}"),
    }
}

pub fn catalog() -> Vec<AssetRecord> {
    serde_json::from_str(data!("assets/catalog.json")).unwrap()
}

pub fn template(key: &str) -> TaskTemplate {
    parse_template(template_text(key)).unwrap()
}

pub fn base(key: &str, s: u64) -> Variation {
    base_with(key, s, &SimConfig::default())
}

pub fn base_with(key: &str, s: u64, cfg: &SimConfig) -> Variation {
    let t = template(key);
    let scenario = parse_scenarios(scenario_text(key)).unwrap().remove(0);
    let cat = catalog();
    let specs: Vec<_> = scenario.specs_in_order(&t).map(|(_, s)| s).collect();
    let resolved = resolve_assets(specs.iter().copied(), &cat, seed::derive(s, "resolve")).unwrap();
    let mut normalized = BTreeMap::new();
    for spec in &specs {
        let r = resolved[&spec.instance_name];
        normalized.insert(spec.instance_name.clone(), normalize_asset(r, spec, seed::derive(s, "normalize"), None));
    }
    let scene = layout_scene(&scenario, &t, &normalized, cfg, seed::derive(s, "layout")).unwrap();
    Variation::base(key, &t, &scenario.instruction, scene, cfg).unwrap()
}

pub fn run(policy: &str, v: &Variation, train: &[&Variation], fidelity: Fidelity, s: u64) -> EpisodeLog {
    let cfg = SimConfig::default();
    run_cfg(policy, v, train, fidelity, s, &cfg)
}

pub fn run_cfg(policy: &str, v: &Variation, train: &[&Variation], fidelity: Fidelity, s: u64, cfg: &SimConfig) -> EpisodeLog {
    let mut p = builtin(policy).unwrap();
    let ctx = EpisodeContext { variation: v, train: train.to_vec(), cfg, fidelity, seed: s };
    run_episode(p.as_mut(), &ctx, Limits::from(cfg)).unwrap()
}

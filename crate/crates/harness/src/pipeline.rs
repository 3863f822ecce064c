//! The stages behind each subcommand, as library functions.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tabletop_core::amplifier::{record_demo, retarget_demo, validate_trajectory, Demonstration, ReplayReport};
use tabletop_core::episode::EpisodeLog;
use tabletop_core::instantiation::{
    instantiate_task, layout_scene, normalize_asset, resolve_assets, AssetOverride, AssetRecord, ScenarioSource,
};
use tabletop_core::perturbation::{
    apply_perturbation, generate_suite, Axis, ManifestEntry, PerturbationSpec, SuiteManifest,
};
use tabletop_core::policy::{builtin, run_episode, EpisodeContext, Limits, Policy, BUILTIN_NAMES};
use tabletop_core::sim::Fidelity;
use tabletop_core::{seed, ScenarioInstance, SimConfig, TaskTemplate, Variation};

use crate::data::{Store, TEMPLATE_KEYS};
use crate::transport::{Endpoint, ExternalPolicy};
use crate::{Failure, Result};

/// `builtin:<name>`, `stdio:<cmd>` or `tcp:<host:port>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Builtin(String),
    External(Endpoint),
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split_once(':') {
            Some(("builtin", n)) if BUILTIN_NAMES.contains(&n) => Ok(Self::Builtin(n.into())),
            Some(("builtin", n)) => Err(format!("unknown builtin policy {n}; expected one of {}", BUILTIN_NAMES.join(", "))),
            Some(("stdio", c)) if !c.is_empty() => Ok(Self::External(Endpoint::Stdio(c.into()))),
            Some(("tcp", a)) if !a.is_empty() => Ok(Self::External(Endpoint::Tcp(a.into()))),
            _ => Err(format!("bad policy {s}; expected builtin:<name>, stdio:<cmd> or tcp:<host:port>")),
        }
    }
}

impl PolicySpec {
    /// Policy id used in logs and directory names.
    pub fn id(&self) -> String {
        match self {
            Self::Builtin(n) => n.clone(),
            Self::External(Endpoint::Stdio(_)) => "stdio".into(),
            Self::External(Endpoint::Tcp(_)) => "tcp".into(),
        }
    }

    pub fn instantiate(&self) -> Result<Box<dyn Policy + Send>> {
        Ok(match self {
            Self::Builtin(n) => builtin(n)?,
            Self::External(e) => Box::new(ExternalPolicy::new(e.clone(), &self.id())),
        })
    }
}

/// Simulator constants from a TOML or JSON file; absent keys keep their
/// defaults.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::from(e).with("path", path.display().to_string()))?;
    let bad = |m: String| Failure::new("config_error", m).with("path", path.display().to_string());
    if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| bad(e.to_string()))
    } else {
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
    }
}

/// Inputs shared by generation: the catalog and reviewed overrides.
pub struct Assets {
    pub catalog: Vec<AssetRecord>,
    pub overrides: BTreeMap<String, AssetOverride>,
}

impl Assets {
    pub fn load(store: &Store) -> Result<Self> {
        Ok(Self { catalog: store.catalog()?, overrides: store.overrides()? })
    }
}

/// Base variation id for scenario `index` of template `key`.
pub fn base_id(key: &str, index: usize) -> String {
    if index == 0 {
        key.to_string()
    } else {
        format!("{key}_{index}")
    }
}

/// Resolves, normalizes and lays out one scenario.
pub fn build_base(
    id: &str,
    template: &TaskTemplate,
    scenario: &ScenarioInstance,
    assets: &Assets,
    cfg: &SimConfig,
    seed: u64,
) -> Result<Variation> {
    let specs: Vec<_> = scenario.specs_in_order(template).map(|(_, s)| s).collect();
    let resolved = resolve_assets(specs.iter().copied(), &assets.catalog, seed::derive(seed, "resolve"))?;
    let mut normalized = BTreeMap::new();
    for spec in &specs {
        let r = resolved[&spec.instance_name];
        let n = normalize_asset(r, spec, seed::derive(seed, "normalize"), assets.overrides.get(&r.uid));
        normalized.insert(spec.instance_name.clone(), n);
    }
    let scene = layout_scene(scenario, template, &normalized, cfg, seed::derive(seed, "layout"))?;
    Ok(Variation::base(id, template, &scenario.instruction, scene, cfg)?)
}

pub struct Generated {
    pub key: String,
    pub scenarios: Vec<ScenarioInstance>,
    pub bases: Vec<Variation>,
}

pub fn generate(
    key: &str,
    template: &TaskTemplate,
    n: usize,
    source: &dyn ScenarioSource,
    assets: &Assets,
    cfg: &SimConfig,
    seed: u64,
) -> Result<Generated> {
    let scenarios = instantiate_task(template, n, source, seed)?;
    let bases = scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| build_base(&base_id(key, i), template, s, assets, cfg, seed::derive(seed, &format!("scenario:{i}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Generated { key: key.into(), scenarios, bases })
}

/// One base per shipped template, from the fixtures.
pub fn shipped_bases(store: &Store, assets: &Assets, cfg: &SimConfig, seed: u64) -> Result<Vec<Variation>> {
    let mut out = Vec::new();
    for key in TEMPLATE_KEYS {
        let t = store.template(key)?;
        let src = crate::source::FixtureSource { store: store.clone(), key: key.to_string() };
        out.extend(generate(key, &t, 1, &src, assets, cfg, seed)?.bases);
    }
    Ok(out)
}

pub fn perturb(bases: &[Variation], store: &Store, suite: &str, assets: &Assets, cfg: &SimConfig, seed: u64) -> Result<SuiteManifest> {
    let config = store.suite(suite)?;
    Ok(generate_suite(bases, &config, seed, &assets.catalog, cfg)?)
}

/// What to run: every manifest entry (or the listed ones) times
/// `episodes` seeds.
pub struct RunSpec<'a> {
    pub manifest: &'a SuiteManifest,
    pub policy: &'a PolicySpec,
    pub episodes: u32,
    pub seed: u64,
    pub fidelity: Fidelity,
    pub cfg: &'a SimConfig,
    pub jobs: usize,
    pub only: Option<&'a [String]>,
}

pub fn episode_seed(seed: u64, k: u32) -> u64 {
    seed.wrapping_add(k as u64)
}

pub fn run_one(manifest: &SuiteManifest, entry: &ManifestEntry, policy: &PolicySpec, fidelity: Fidelity, cfg: &SimConfig, seed: u64) -> Result<EpisodeLog> {
    let train = entry.variation.train_set.iter().filter_map(|id| manifest.get(id).map(|m| &m.variation)).collect();
    let ctx = EpisodeContext { variation: &entry.variation, train, cfg, fidelity, seed };
    let mut p = policy.instantiate()?;
    run_episode(&mut p, &ctx, Limits::from(cfg)).map_err(|e| Failure::from(e).with("variation", &entry.id).with("seed", seed))
}

/// Runs every (entry, seed) pair on a pool of `jobs` threads and hands
/// each log to `sink` on the worker. Results keep manifest order.
pub fn run<T: Send>(spec: &RunSpec<'_>, sink: impl Fn(&ManifestEntry, u64, EpisodeLog) -> Result<T> + Sync) -> Result<Vec<T>> {
    if spec.episodes == 0 {
        return Err(Failure::new("precondition", "episodes must be at least 1"));
    }
    let mut work = Vec::new();
    for e in &spec.manifest.entries {
        if spec.only.is_some_and(|o| !o.iter().any(|id| id == &e.id)) {
            continue;
        }
        for k in 0..spec.episodes {
            work.push((e, episode_seed(spec.seed, k)));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.max(1))
        .build()
        .map_err(|e| Failure::new("io_error", e.to_string()))?;
    pool.install(|| {
        work.par_iter()
            .map(|(e, s)| sink(e, *s, run_one(spec.manifest, e, spec.policy, spec.fidelity, spec.cfg, *s)?))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetargetOutcome {
    pub variation_id: String,
    pub error: Option<String>,
    pub replay: Option<ReplayReport>,
}

impl RetargetOutcome {
    pub fn success(&self) -> bool {
        self.replay.as_ref().is_some_and(|r| r.success && r.violations.is_empty())
    }
}

/// `n` relocated copies of `v`, each from its own seed.
pub fn relocated_layouts(v: &Variation, n: usize, assets: &Assets, cfg: &SimConfig, seed: u64) -> Vec<Result<Variation>> {
    (0..n)
        .map(|k| {
            let spec = PerturbationSpec {
                axis: Axis::SpatialLayoutShift,
                params: json!({"mode": "relocate_uniform"}),
                seed: seed::derive(seed, &format!("amplify:{k}")),
            };
            let mut out = apply_perturbation(v, &spec, &assets.catalog, cfg)?;
            out.id = format!("{}~{k}", v.id);
            Ok(out)
        })
        .collect()
}

/// Records an oracle demonstration on `v` and retargets it to each target.
pub fn amplify(v: &Variation, targets: &[Result<Variation>], cfg: &SimConfig) -> Result<(Demonstration, Vec<(Option<Demonstration>, RetargetOutcome)>)> {
    let demo = record_demo(v, cfg)?;
    let out = targets
        .iter()
        .enumerate()
        .map(|(k, t)| match t {
            Err(e) => (None, RetargetOutcome { variation_id: format!("{}~{k}", v.id), error: Some(e.to_string()), replay: None }),
            Ok(t) => match retarget_demo(&demo, t, cfg) {
                Err(e) => (None, RetargetOutcome { variation_id: t.id.clone(), error: Some(e.to_string()), replay: None }),
                Ok(d) => {
                    let r = validate_trajectory(&d, t, cfg);
                    (Some(d), RetargetOutcome { variation_id: t.id.clone(), error: None, replay: Some(r) })
                }
            },
        })
        .collect();
    Ok((demo, out))
}

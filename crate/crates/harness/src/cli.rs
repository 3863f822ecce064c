//! The `tabletop` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tabletop_core::episode::EpisodeLog;
use tabletop_core::metrics::build_report;
use tabletop_core::perturbation::SuiteManifest;
use tabletop_core::sim::Fidelity;
use tabletop_core::vqa::{generate_items, verify_item, VqaItem};
use tabletop_core::{SimConfig, Variation};

use crate::data::{Store, TEMPLATE_KEYS};
use crate::files::{bases_dir, episode_path, find, manifest_path, reports_dir, write_atomic, write_json};
use crate::pipeline::{amplify, generate, perturb, relocated_layouts, run, Assets, PolicySpec, RunSpec};
use crate::source::{FixtureSource, VlmSource};
use crate::{Failure, Result};

#[derive(Debug, Parser)]
#[command(name = "tabletop", version, about = "Diagnostic tabletop manipulation harness")]
pub struct Cli {
    /// TOML or JSON file overriding simulator constants.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Data directory replacing the embedded templates, fixtures and catalog.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SourceKind {
    Fixture,
    Vlm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FidelityArg {
    Full,
    Degraded,
}

impl From<FidelityArg> for Fidelity {
    fn from(f: FidelityArg) -> Self {
        match f {
            FidelityArg::Full => Fidelity::Full,
            FidelityArg::Degraded => Fidelity::Degraded,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Instantiate templates into scenarios and laid-out base tasks.
    Gen {
        /// Template key or path; all shipped templates when omitted.
        #[arg(long)]
        template: Vec<String>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, value_enum, default_value = "fixture")]
        source: SourceKind,
        #[command(flatten)]
        common: Common,
    },
    /// Expand base tasks into a suite manifest.
    Perturb {
        /// Directory of `*.variation.json` bases; `<out>/bases` by default.
        #[arg(long)]
        bases: Option<PathBuf>,
        /// Suite name or path to a `*.suite.json`.
        #[arg(long, default_value = "default")]
        suite: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a policy on every manifest entry.
    Run {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// builtin:<name>, stdio:<cmd> or tcp:<host:port>
        #[arg(long, default_value = "builtin:oracle", value_parser = parse_policy)]
        policy: PolicySpec,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
        episodes: u32,
        #[arg(long, value_enum, default_value = "full")]
        fidelity: FidelityArg,
        /// Worker threads; all cores when omitted.
        #[arg(long)]
        jobs: Option<usize>,
        /// Restrict to these entry ids.
        #[arg(long)]
        only: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Derive verified question-answer items from episode logs.
    Vqa {
        /// Directory searched for `*.episode.jsonl`; `<out>/runs` by default.
        #[arg(long)]
        runs: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Record oracle demonstrations and retarget them to relocated layouts.
    Amplify {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Source entry ids; every base task when omitted.
        #[arg(long)]
        variation: Vec<String>,
        #[arg(long, default_value_t = 10)]
        layouts: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Aggregate episode logs into metric reports.
    Report {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        runs: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_policy(s: &str) -> std::result::Result<PolicySpec, String> {
    s.parse()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::from(e).with("path", path.display().to_string()))?;
    serde_json::from_str(&text).map_err(|e| Failure::from(e).with("path", path.display().to_string()))
}

fn load_manifest(path: Option<&PathBuf>, out: &Path) -> Result<SuiteManifest> {
    read_json(&path.cloned().unwrap_or_else(|| manifest_path(out)))
}

fn load_logs(dir: &Path) -> Result<Vec<(PathBuf, EpisodeLog)>> {
    find(dir, ".episode.jsonl")?
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p)?;
            let log = EpisodeLog::from_jsonl(&text).map_err(|e| Failure::from(e).with("path", p.display().to_string()))?;
            Ok((p, log))
        })
        .collect()
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> Result<String> {
    let mut s = String::new();
    for i in items {
        s.push_str(&serde_json::to_string(i)?);
        s.push('\n');
    }
    Ok(s)
}

fn safe_name(id: &str) -> String {
    id.replace('/', "__")
}

pub fn execute(cli: Cli) -> Result<serde_json::Value> {
    let cfg = match &cli.config {
        Some(p) => crate::pipeline::load_config(p)?,
        None => SimConfig::default(),
    };
    let store = cli.data.clone().map(Store::dir).unwrap_or_default();
    match cli.command {
        Command::Gen { template, n, source, common } => {
            let assets = Assets::load(&store)?;
            let keys: Vec<String> =
                if template.is_empty() { TEMPLATE_KEYS.iter().map(|k| k.to_string()).collect() } else { template };
            let vlm = match source {
                SourceKind::Vlm => Some(VlmSource::from_env()?),
                SourceKind::Fixture => None,
            };
            let mut written = Vec::new();
            for key in &keys {
                let t = store.template(key)?;
                let name = Path::new(key)
                    .file_name()
                    .and_then(|f| f.to_str())
                    .map(|f| f.trim_end_matches(".json").trim_end_matches(".template").to_string())
                    .unwrap_or_else(|| key.clone());
                let g = match &vlm {
                    Some(v) => generate(&name, &t, n, v, &assets, &cfg, common.seed)?,
                    None => {
                        let src = FixtureSource { store: store.clone(), key: name.clone() };
                        generate(&name, &t, n, &src, &assets, &cfg, common.seed)?
                    }
                };
                let sp = common.out.join("scenarios").join(&name).join(format!("{}.scenario.json", common.seed));
                write_json(&sp, &g.scenarios)?;
                written.push(sp.display().to_string());
                for b in &g.bases {
                    let bp = bases_dir(&common.out).join(format!("{}.variation.json", b.id));
                    write_json(&bp, b)?;
                    written.push(bp.display().to_string());
                }
            }
            Ok(json!({"written": written}))
        }
        Command::Perturb { bases, suite, common } => {
            let assets = Assets::load(&store)?;
            let dir = bases.unwrap_or_else(|| bases_dir(&common.out));
            let vs: Vec<Variation> = find(&dir, ".variation.json")?.iter().map(|p| read_json(p)).collect::<Result<_>>()?;
            let m = perturb(&vs, &store, &suite, &assets, &cfg, common.seed)?;
            let path = manifest_path(&common.out);
            write_json(&path, &m)?;
            Ok(json!({"manifest": path.display().to_string(), "entries": m.entries.len(), "axis_counts": m.axis_counts}))
        }
        Command::Run { manifest, policy, episodes, fidelity, jobs, only, common } => {
            let m = load_manifest(manifest.as_ref(), &common.out)?;
            for id in &only {
                if m.get(id).is_none() {
                    return Err(Failure::new("precondition", format!("manifest has no entry {id}")));
                }
            }
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let spec = RunSpec {
                manifest: &m,
                policy: &policy,
                episodes,
                seed: common.seed,
                fidelity: fidelity.into(),
                cfg: &cfg,
                jobs,
                only: (!only.is_empty()).then_some(&only[..]),
            };
            let pid = policy.id();
            let out = &common.out;
            let results = run(&spec, |e, seed, log| {
                write_atomic(&episode_path(out, &m.suite, &pid, &e.id, seed), log.to_jsonl().as_bytes())?;
                Ok(log.end.success)
            })?;
            let ok = results.iter().filter(|s| **s).count();
            Ok(json!({"policy": pid, "episodes": results.len(), "successes": ok}))
        }
        Command::Vqa { runs, common } => {
            let dir = runs.unwrap_or_else(|| common.out.join("runs"));
            let mut total = 0;
            for p in find(&dir, ".episode.jsonl")? {
                let log = EpisodeLog::from_jsonl(&std::fs::read_to_string(&p)?)?;
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default().replace(".episode.jsonl", "");
                let episode = format!("{}/{}/{}", log.header.policy_id, log.header.variation_id, name);
                let items: Vec<VqaItem> = generate_items(&episode, &log);
                let frames: Vec<_> = log.frames().collect();
                for i in &items {
                    let f = frames.iter().find(|f| f.t == i.frame_ref.t).copied();
                    if !f.is_some_and(|f| verify_item(i, &episode, f)) {
                        return Err(Failure::new("invariant_error", "generated item failed verification")
                            .with("episode", &episode)
                            .with("question", &i.question));
                    }
                }
                total += items.len();
                write_atomic(&p.with_file_name(format!("{name}.vqa.jsonl")), jsonl(&items)?.as_bytes())?;
            }
            Ok(json!({"items": total}))
        }
        Command::Amplify { manifest, variation, layouts, common } => {
            let assets = Assets::load(&store)?;
            let m = load_manifest(manifest.as_ref(), &common.out)?;
            let ids: Vec<String> = if variation.is_empty() {
                m.entries.iter().filter(|e| e.axis.is_none()).map(|e| e.id.clone()).collect()
            } else {
                variation
            };
            let mut summary = Vec::new();
            let (mut ok, mut tried) = (0, 0);
            for id in &ids {
                let e = m.get(id).ok_or_else(|| Failure::new("precondition", format!("manifest has no entry {id}")))?;
                let targets = relocated_layouts(&e.variation, layouts, &assets, &cfg, common.seed);
                let (demo, outs) = amplify(&e.variation, &targets, &cfg)?;
                let dir = common.out.join("demos").join(safe_name(id));
                write_json(&dir.join("source.demo.json"), &demo)?;
                for (k, (d, o)) in outs.iter().enumerate() {
                    if let Some(d) = d {
                        write_json(&dir.join(format!("{k}.demo.json")), d)?;
                    }
                    tried += 1;
                    ok += o.success() as usize;
                    summary.push(json!({"source": id, "target": o.variation_id, "success": o.success(), "error": o.error}));
                }
            }
            write_json(&common.out.join("demos").join("amplify.summary.json"), &summary)?;
            Ok(json!({"retargeted": tried, "replayed": ok}))
        }
        Command::Report { manifest, runs, common } => {
            let m = load_manifest(manifest.as_ref(), &common.out)?;
            let dir = runs.unwrap_or_else(|| common.out.join("runs").join(&m.suite));
            let logs: Vec<EpisodeLog> = load_logs(&dir)?.into_iter().map(|(_, l)| l).collect();
            let r = build_report(&m, &logs)?;
            let rd = reports_dir(&common.out);
            write_atomic(&rd.join(format!("{}.report.json", m.suite)), r.to_json().as_bytes())?;
            write_atomic(&rd.join(format!("{}.report.txt", m.suite)), r.to_text().as_bytes())?;
            for (name, header, rows) in r.tables() {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&header).map_err(|e| Failure::new("io_error", e.to_string()))?;
                for row in &rows {
                    w.write_record(row).map_err(|e| Failure::new("io_error", e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| Failure::new("io_error", e.to_string()))?;
                write_atomic(&rd.join(format!("{}.{name}.csv", m.suite)), &bytes)?;
            }
            Ok(json!({"episodes": logs.len(), "reports": rd.display().to_string()}))
        }
    }
}

/// Parses `args`, runs the subcommand and returns the process exit code:
/// 0 on success, 1 on an operation error, 2 on an argument error.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code == 0 {
                return 0;
            }
            eprintln!("{}", Failure::new("usage_error", e.kind().to_string()).to_json());
            return 2;
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(f) => {
            eprintln!("{}", f.to_json());
            1
        }
    }
}

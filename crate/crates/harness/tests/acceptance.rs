mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde_json::json;
use tabletop::data::Store;
use tabletop::pipeline::{amplify, relocated_layouts, run, Assets, PolicySpec, RunSpec};
use tabletop_core::episode::EpisodeLog;
use tabletop_core::metrics::{
    avg_len, build_matrix, classify_failure, delta_sr, dgr, intention_accuracy, intervention_cell, DiagnosticMatrix,
    FailureMode,
};
use tabletop_core::perturbation::{apply_perturbation, Axis, InitialState, ManifestEntry, PerturbationSpec, SuiteManifest};
use tabletop_core::policy::{builtin, run_episode, EpisodeContext, Limits};
use tabletop_core::sim::Fidelity;
use tabletop_core::types::Role;
use tabletop_core::vqa::{format_bbox, generate_items, verify_item, VqaCategory};
use tabletop_core::{seed, SimConfig, Variation};

const EPISODES: u32 = 20;

struct Outcome {
    id: String,
    success: bool,
    pre_satisfied: bool,
    mode: FailureMode,
    first: Option<String>,
    invalid: u32,
    landed: u32,
}

fn outcome(id: &str, log: &EpisodeLog) -> Outcome {
    let r = dgr(&[log]);
    Outcome {
        id: id.to_string(),
        success: log.end.success,
        pre_satisfied: log.header.pre_satisfied,
        mode: classify_failure(log),
        first: log.end.first_grasp.as_ref().map(|g| g.instance.clone()),
        invalid: r.numerator,
        landed: r.denominator,
    }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run_with<T: Send>(
    policy: &str,
    ids: &[String],
    episodes: u32,
    fidelity: Fidelity,
    sink: impl Fn(&ManifestEntry, u64, EpisodeLog) -> tabletop::Result<T> + Sync,
) -> Vec<T> {
    let cfg = SimConfig::default();
    let policy: PolicySpec = format!("builtin:{policy}").parse().unwrap();
    let spec = RunSpec {
        manifest: common::manifest(),
        policy: &policy,
        episodes,
        seed: 7,
        fidelity,
        cfg: &cfg,
        jobs: jobs(),
        only: Some(ids),
    };
    run(&spec, sink).unwrap()
}

fn outcomes(policy: &str, ids: &[String], episodes: u32, fidelity: Fidelity) -> Vec<Outcome> {
    run_with(policy, ids, episodes, fidelity, |e, _, log| Ok(outcome(&e.id, &log)))
}

fn ids(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn share(os: &[Outcome], pred: impl Fn(&Outcome) -> bool) -> f64 {
    os.iter().filter(|o| pred(o)).count() as f64 / os.len() as f64
}

fn has_absent(v: &Variation) -> bool {
    v.perturbation.iter().any(|p| {
        p.axis == Axis::StateIntervention
            && p.params.get("per_instance").and_then(|m| m.as_object()).is_some_and(|m| m.values().any(|s| s == "absent"))
    })
}

type Verdict = (bool, String);

fn determinism() -> Verdict {
    fn tabletop(dir: &Path, args: &[&str]) {
        let o = Command::new(env!("CARGO_BIN_EXE_tabletop")).current_dir(dir).args(args).output().unwrap();
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    fn pipeline(dir: &Path) -> Duration {
        let t = Instant::now();
        for args in [
            &["gen"][..],
            &["perturb"],
            &["run", "--policy", "builtin:oracle", "--episodes", "2"],
            &["run", "--policy", "builtin:behavioral_inertia", "--episodes", "2"],
            &["report"],
        ] {
            tabletop(dir, args);
        }
        t.elapsed()
    }
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ta = pipeline(a.path());
    let tb = pipeline(b.path());
    let (mut fa, mut fb) = (BTreeMap::new(), BTreeMap::new());
    walk(a.path(), a.path(), &mut fa);
    walk(b.path(), b.path(), &mut fb);
    let bytes: usize = fa.values().map(Vec::len).sum();
    let same = fa == fb && fa.keys().any(|p| p.ends_with("default.report.json"));
    let slowest = ta.max(tb);
    (
        same && slowest < Duration::from_secs(60),
        format!("{} files, {bytes} bytes, identical={same}, slowest run {:.1}s (limit 60s)", fa.len(), slowest.as_secs_f64()),
    )
}

fn oracle_competence(m: &SuiteManifest) -> (Verdict, Vec<Outcome>) {
    let chosen: Vec<String> = m
        .entries
        .iter()
        .filter(|e| e.axis.is_none() || (e.tag == tabletop_core::perturbation::Split::Eval && !has_absent(&e.variation)))
        .map(|e| e.id.clone())
        .collect();
    let bases = m.entries.iter().filter(|e| e.axis.is_none()).count();
    let os = outcomes("oracle", &chosen, EPISODES, Fidelity::Full);
    let solvable: Vec<&Outcome> = os.iter().filter(|o| !o.pre_satisfied).collect();
    let pre: Vec<&Outcome> = os.iter().filter(|o| o.pre_satisfied).collect();
    let sr = solvable.iter().filter(|o| o.success).count();
    let freezes = pre.iter().filter(|o| o.mode == FailureMode::CorrectFreeze).count();
    let failed: Vec<&str> = os
        .iter()
        .filter(|o| if o.pre_satisfied { o.mode != FailureMode::CorrectFreeze } else { !o.success })
        .map(|o| o.id.as_str())
        .collect();
    let v = (
        failed.is_empty() && bases == 10,
        format!(
            "{} variations ({bases} bases) x {EPISODES} episodes: SR {sr}/{} on solvable, CorrectFreeze {freezes}/{} on pre-satisfied{}",
            chosen.len(),
            solvable.len(),
            pre.len(),
            if failed.is_empty() { String::new() } else { format!("; failing {:?}", &failed[..failed.len().min(5)]) }
        ),
    );
    (v, os)
}

fn coffee() -> Verdict {
    let cells = ["coffee/cf_top", "coffee/cf_bottom", "coffee/cf_red", "coffee/cf_blue"];
    let m = common::manifest();
    let want: [(&str, [f64; 4]); 3] = [
        ("oracle", [100.0, 100.0, 100.0, 100.0]),
        ("lexical_shortcut", [100.0, 100.0, 0.0, 0.0]),
        ("layout_bias", [100.0, 0.0, 100.0, 0.0]),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (policy, expected) in want {
        let logs = run_with(policy, &ids(&cells), EPISODES, Fidelity::Full, |e, _, log| Ok((e.id.clone(), log)));
        let mut got = [0.0; 4];
        for (k, cell) in cells.iter().enumerate() {
            let v = &m.get(cell).unwrap().variation;
            let target = *v.goal.targets().iter().next().unwrap();
            let ls: Vec<&EpisodeLog> = logs.iter().filter(|(id, _)| id == cell).map(|(_, l)| l).collect();
            got[k] = intention_accuracy(&ls, target).unwrap().percent().unwrap();
        }
        ok &= got == expected;
        parts.push(format!("{policy} {}", got.map(|g| format!("{g:.0}")).join("/")));
    }
    let halts = outcomes("conflict_halt", &ids(&cells[2..]), EPISODES, Fidelity::Full);
    let frozen = halts.iter().filter(|o| o.mode == FailureMode::PhaseFreeze).count();
    ok &= frozen == halts.len();
    parts.push(format!("conflict_halt PhaseFreeze {frozen}/{} on cf_red+cf_blue", halts.len()));
    (ok, parts.join("; "))
}

fn inertia() -> Verdict {
    let os = outcomes("behavioral_inertia", &ids(&["fastfood/novel"]), EPISODES, Fidelity::Full);
    let sr = share(&os, |o| o.success);
    let a_first = share(&os, |o| o.first.as_deref() == Some("burger"));
    let rows = [([60.0, 45.0], 5.0, -47.5), ([75.0, 40.0], 15.0, -42.5), ([65.0, 40.0], 0.0, -52.5)];
    let deltas: Vec<f64> = rows.iter().map(|(s, n, _)| delta_sr(s, *n).unwrap()).collect();
    let exact = rows.iter().zip(&deltas).all(|((_, _, w), d)| d == w);
    (
        sr == 0.0 && a_first == 1.0 && exact,
        format!("novel SR {:.0}%, first grasp burger {:.0}%; delta_sr {deltas:?}", sr * 100.0, a_first * 100.0),
    )
}

fn causal_confusion() -> (Verdict, Vec<Outcome>) {
    let cell = ids(&["fastfood/one_burger"]);
    let os = outcomes("causal_confusion", &cell, EPISODES, Fidelity::Full);
    let oracle = outcomes("oracle", &cell, EPISODES, Fidelity::Full);
    let skip = share(&os, |o| o.mode == FailureMode::SkipStep);
    let oracle_ok = share(&oracle, |o| o.mode == FailureMode::Success);
    (
        (skip >= 0.95 && oracle_ok == 1.0, format!("SkipStep {:.0}% (need >=95%), oracle Success {:.0}%", skip * 100.0, oracle_ok * 100.0)),
        os,
    )
}

fn dgr_criterion(oracle: &[Outcome]) -> Verdict {
    let cfg = SimConfig::default();
    let m = common::manifest();
    let store = Store::embedded();
    let assets = Assets::load(&store).unwrap();
    let base = &m.get("tidy").unwrap().variation;
    let layouts: Vec<Variation> = (0..)
        .map(|k| PerturbationSpec {
            axis: Axis::SpatialLayoutShift,
            params: json!({"mode": "relocate_uniform", "include_distractors": true}),
            seed: seed::derive(7, &format!("dgr:{k}")),
        })
        .filter_map(|spec| apply_perturbation(base, &spec, &assets.catalog, &cfg).ok())
        .take(200)
        .collect();
    let runs: Vec<(u32, u32)> = layouts
        .par_iter()
        .map(|v| {
            let mut p = builtin("blind_grasp").unwrap();
            let ctx = EpisodeContext { variation: v, train: vec![base], cfg: &cfg, fidelity: Fidelity::Full, seed: 7 };
            let r = dgr(&[&run_episode(p.as_mut(), &ctx, Limits::from(&cfg)).unwrap()]);
            (r.numerator, r.denominator)
        })
        .collect();
    let (bad, landed) = runs.iter().fold((0, 0), |(a, b), (x, y)| (a + x, b + y));
    let observed = bad as f64 / landed as f64;
    let count = |v: &Variation, role: Role| v.scene.objects.iter().filter(|o| o.role == role).count();
    let (d, td) = layouts
        .iter()
        .fold((0, 0), |(d, td), v| (d + count(v, Role::Distractor), td + count(v, Role::Target) + count(v, Role::Distractor)));
    let expected = d as f64 / td as f64;
    let blind_ok = layouts.len() == 200 && (observed - expected).abs() <= 0.05;

    let oracle_bad: u32 = oracle.iter().map(|o| o.invalid).sum();
    let oracle_landed: u32 = oracle.iter().map(|o| o.landed).sum();

    let tidy: Vec<String> =
        m.entries.iter().filter(|e| e.base_task_id == "tidy").map(|e| e.id.clone()).collect();
    let pooled = |f: Fidelity| {
        let os = outcomes("semantic_match", &tidy, EPISODES, f);
        let (b, l) = os.iter().fold((0, 0), |(b, l), o| (b + o.invalid, l + o.landed));
        if l == 0 { 0.0 } else { b as f64 / l as f64 }
    };
    let (full, degraded) = (pooled(Fidelity::Full), pooled(Fidelity::Degraded));
    (
        blind_ok && oracle_bad == 0 && degraded > full,
        format!(
            "blind_grasp DGR {observed:.3} vs enumerated D/(T+D) {expected:.3} over {} layouts; oracle DGR {oracle_bad}/{oracle_landed}; semantic_match DGR full {full:.3} < degraded {degraded:.3}",
            layouts.len()
        ),
    )
}

fn avg_len_rows() -> Verdict {
    let rows: [([f64; 5], f64); 6] = [
        ([0.963, 0.914, 0.853, 0.797, 0.717], 4.244),
        ([0.935, 0.868, 0.814, 0.775, 0.734], 4.126),
        ([0.934, 0.870, 0.820, 0.777, 0.737], 4.138),
        ([0.899, 0.801, 0.718, 0.664, 0.587], 3.669),
        ([0.931, 0.846, 0.762, 0.694, 0.627], 3.860),
        ([0.935, 0.859, 0.810, 0.771, 0.711], 4.086),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (rates, want) in rows {
        let got = avg_len(&rates).unwrap();
        ok &= (got - want).abs() <= 1e-3;
        parts.push(format!("{got:.3} (want {want:.3})"));
    }
    (ok, parts.join(", "))
}

fn matrix(m: &SuiteManifest, policy: &str, prefix: &str, os: &[Outcome]) -> DiagnosticMatrix {
    let labelled: Vec<_> = os
        .iter()
        .filter(|o| o.id.starts_with(prefix))
        .map(|o| {
            let (r, c) = intervention_cell(&m.get(&o.id).unwrap().variation, "lemon", "mangosteen").unwrap();
            (r, c, o.mode)
        })
        .collect();
    build_matrix(prefix, policy, "lemon", "mangosteen", &labelled)
}

fn matrices(m: &SuiteManifest, confusion: &[Outcome]) -> Verdict {
    use FailureMode::*;
    use InitialState::{Absent as Ab, InContainer as In, OnTable as On};
    let grid: Vec<String> =
        m.eval_entries().filter(|e| e.id.starts_with("fruit/short_") || e.id.starts_with("fruit/long_")).map(|e| e.id.clone()).collect();
    let green = [Success, CorrectFreeze];
    let mut ok = grid.len() == 18;
    let mut misses = Vec::new();
    let mut check = |label: &str, mx: &DiagnosticMatrix, cell: (InitialState, InitialState), allowed: &[FailureMode]| {
        let modal = mx.cell(cell.0, cell.1).modal;
        if !modal.is_some_and(|x| allowed.contains(&x)) {
            ok = false;
            misses.push(format!("{label} {cell:?} = {modal:?}"));
        }
    };
    let oracle = outcomes("oracle", &grid, 5, Fidelity::Full);
    let inertia = outcomes("behavioral_inertia", &grid, 5, Fidelity::Full);
    for (policy, os) in [("oracle", &oracle), ("behavioral_inertia", &inertia)] {
        let short = matrix(m, policy, "fruit/short_", os);
        for c in [On, In, Ab] {
            check(&format!("{policy} short"), &short, (On, c), &[Success]);
            check(&format!("{policy} short"), &short, (In, c), &[CorrectFreeze]);
        }
    }
    let long = matrix(m, "oracle", "fruit/long_", &oracle);
    for r in [On, In, Ab] {
        for c in [On, In, Ab] {
            if (r, c) != (Ab, Ab) {
                check("oracle long", &long, (r, c), &green);
            }
        }
    }
    let long = matrix(m, "behavioral_inertia", "fruit/long_", &inertia);
    for cell in [(On, On), (On, In), (In, In), (Ab, On), (Ab, In)] {
        check("behavioral_inertia long", &long, cell, &green);
    }
    check("behavioral_inertia long", &long, (On, Ab), &[AirGrasp]);
    check("behavioral_inertia long", &long, (In, On), &[PhaseFreeze, SkipStep]);
    check("behavioral_inertia long", &long, (In, Ab), &[AirGrasp, Oscillation]);

    let labelled: Vec<_> = confusion
        .iter()
        .map(|o| {
            let (r, c) = intervention_cell(&m.get(&o.id).unwrap().variation, "burger_2", "burger").unwrap();
            (r, c, o.mode)
        })
        .collect();
    let burgers = build_matrix("fastfood", "causal_confusion", "burger_2", "burger", &labelled);
    check("causal_confusion", &burgers, (Ab, On), &[SkipStep]);
    let detail = if misses.is_empty() {
        "oracle green on every non-ambiguous cell; behavioral_inertia long red cells AirGrasp / PhaseFreeze / AirGrasp; causal_confusion one-burger SkipStep".to_string()
    } else {
        misses.join("; ")
    };
    (ok, detail)
}

fn vqa(m: &SuiteManifest) -> Verdict {
    let every: Vec<String> = m.entries.iter().map(|e| e.id.clone()).collect();
    let counts = run_with("oracle", &every, 1, Fidelity::Full, |e, _, log| {
        let items = generate_items(&e.id, &log);
        let frames: Vec<_> = log.frames().collect();
        let (mut verified, mut mutants, mut rejected) = (0usize, 0usize, 0usize);
        for item in &items {
            let f = frames.iter().find(|f| f.t == item.frame_ref.t).unwrap();
            verified += verify_item(item, &e.id, f) as usize;
            let mut bad = Vec::new();
            match item.category {
                VqaCategory::Grounding => {
                    let b: Vec<f64> =
                        item.answer.trim_matches(['[', ']']).split(", ").map(|x| x.parse().unwrap()).collect();
                    for k in 0..4 {
                        for d in [-1.0, 1.0] {
                            let mut c = [b[0], b[1], b[2], b[3]];
                            c[k] += d;
                            bad.push(format_bbox(c));
                        }
                    }
                }
                VqaCategory::Counting => {
                    let n: i64 = item.answer.parse().unwrap();
                    bad.push((n - 1).to_string());
                    bad.push((n + 1).to_string());
                }
                VqaCategory::Tracking => {}
            }
            for answer in bad {
                let mut mutant = item.clone();
                mutant.answer = answer;
                mutants += 1;
                rejected += !verify_item(&mutant, &e.id, f) as usize;
            }
        }
        Ok((items.len(), verified, mutants, rejected))
    });
    let (n, v, mu, rj) = counts.iter().fold((0, 0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2, a.3 + c.3));
    (n > 0 && v == n && rj == mu, format!("{v}/{n} items verify; {rj}/{mu} off-by-one mutants rejected"))
}

fn amplifier(m: &SuiteManifest) -> Verdict {
    let cfg = SimConfig::default();
    let store = Store::embedded();
    let assets = Assets::load(&store).unwrap();
    let bases: Vec<&Variation> = m.entries.iter().filter(|e| e.axis.is_none()).map(|e| &e.variation).collect();
    let per = 100 / bases.len();
    let results: Vec<(usize, usize)> = bases
        .par_iter()
        .map(|b| {
            let targets = relocated_layouts(b, per, &assets, &cfg, 7);
            let (_, outs) = amplify(b, &targets, &cfg).unwrap();
            (outs.iter().filter(|(_, o)| o.success()).count(), outs.len())
        })
        .collect();
    let (ok, total) = results.iter().fold((0, 0), |a, r| (a.0 + r.0, a.1 + r.1));
    (total == 100 && ok * 10 >= total * 9, format!("{ok}/{total} retargeted demos replay to success (need >=90%)"))
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let started = Instant::now();
    let m = common::manifest();
    let mut lines: Vec<(&str, Verdict)> = Vec::new();
    let mut record = |name, v: Verdict| {
        println!("{} {name}: {}", if v.0 { "PASS" } else { "FAIL" }, v.1);
        lines.push((name, v));
    };
    record("determinism", determinism());
    let (v, oracle) = oracle_competence(m);
    record("oracle competence", v);
    record("coffee intention accuracy", coffee());
    record("behavioral inertia and delta_sr", inertia());
    let (v, confusion) = causal_confusion();
    record("causal confusion", v);
    record("distractor grasp rate", dgr_criterion(&oracle));
    record("avg_len", avg_len_rows());
    record("diagnostic matrices", matrices(m, &confusion));
    record("vqa verification", vqa(m));
    record("amplifier retargeting", amplifier(m));
    let failed = lines.iter().filter(|(_, v)| !v.0).count();
    println!("{} of {} criteria pass ({:.1}s)", lines.len() - failed, lines.len(), started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

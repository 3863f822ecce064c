use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::matrix::{build_matrix, intervention_cell, matrix_cell_order, DiagnosticMatrix};
use super::{avg_len, chain_rates, classify_failure, dgr, delta_sr, intention_accuracy, success_rate, FailureMode, Rate};
use crate::episode::EpisodeLog;
use crate::error::{Error, Result};
use crate::perturbation::{Axis, InitialState, Split, SuiteManifest, Variation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationMetrics {
    pub policy_id: String,
    pub variation_id: String,
    pub axis: Option<Axis>,
    pub tag: Split,
    pub episodes: u32,
    pub success: Rate,
    pub dgr: Rate,
    pub modes: BTreeMap<FailureMode, u32>,
}

/// First-grasp correctness next to full-task success, for variations with
/// a single instructed target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentionEntry {
    pub policy_id: String,
    pub variation_id: String,
    pub target: String,
    pub intention: Rate,
    pub success: Rate,
}

/// Success rates in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEntry {
    pub policy_id: String,
    pub variation_id: String,
    pub seen_ids: Vec<String>,
    pub seen: Vec<f64>,
    pub novel: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgLenEntry {
    pub policy_id: String,
    pub variation_id: String,
    pub order: Vec<String>,
    pub rates: Vec<f64>,
    pub avg_len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub suite: String,
    pub variations: Vec<VariationMetrics>,
    pub intention: Vec<IntentionEntry>,
    /// Pooled over every episode of each policy.
    pub dgr: BTreeMap<String, Rate>,
    pub delta_sr: Vec<DeltaEntry>,
    pub avg_len: Vec<AvgLenEntry>,
    pub matrices: Vec<DiagnosticMatrix>,
}

type Groups<'a> = BTreeMap<(String, String), Vec<&'a EpisodeLog>>;

fn single_target(v: &Variation) -> Option<String> {
    let t = v.goal.targets();
    (t.len() == 1).then(|| t.into_iter().next().unwrap_or_default().to_string())
}

/// Aggregates episode logs against the manifest they were run from.
pub fn build_report(manifest: &SuiteManifest, logs: &[EpisodeLog]) -> Result<MetricReport> {
    let mut groups: Groups<'_> = BTreeMap::new();
    for l in logs {
        if manifest.get(&l.header.variation_id).is_none() {
            return Err(Error::Precondition(format!("log for unknown variation {}", l.header.variation_id)));
        }
        groups.entry((l.header.policy_id.clone(), l.header.variation_id.clone())).or_default().push(l);
    }

    let mut variations = Vec::new();
    let mut intention = Vec::new();
    let mut avg = Vec::new();
    let mut per_policy: BTreeMap<String, Vec<&EpisodeLog>> = BTreeMap::new();
    for ((policy, vid), ls) in &groups {
        let m = manifest.get(vid).expect("checked above");
        let mut modes = BTreeMap::new();
        for l in ls {
            *modes.entry(classify_failure(l)).or_insert(0) += 1;
        }
        let success = success_rate(ls)?;
        variations.push(VariationMetrics {
            policy_id: policy.clone(),
            variation_id: vid.clone(),
            axis: m.axis,
            tag: m.tag,
            episodes: ls.len() as u32,
            success,
            dgr: dgr(ls),
            modes,
        });
        if let Some(target) = single_target(&m.variation) {
            intention.push(IntentionEntry {
                policy_id: policy.clone(),
                variation_id: vid.clone(),
                intention: intention_accuracy(ls, &target)?,
                target,
                success,
            });
        }
        let order = &ls[0].header.required_order;
        if order.len() >= 2 {
            let rates = chain_rates(ls, order);
            avg.push(AvgLenEntry {
                policy_id: policy.clone(),
                variation_id: vid.clone(),
                order: order.clone(),
                avg_len: avg_len(&rates)?,
                rates,
            });
        }
        per_policy.entry(policy.clone()).or_default().extend(ls.iter().copied());
    }

    let mut deltas = Vec::new();
    for ((policy, vid), ls) in &groups {
        let m = manifest.get(vid).expect("checked above");
        if m.tag != Split::Eval || m.axis != Some(Axis::PrimitiveRecomposition) {
            continue;
        }
        let mut seen_ids = Vec::new();
        let mut seen = Vec::new();
        for t in &m.variation.train_set {
            if let Some(tl) = groups.get(&(policy.clone(), t.clone())) {
                seen_ids.push(t.clone());
                seen.push(success_rate(tl)?.percent().unwrap_or(0.0));
            }
        }
        if seen.is_empty() {
            continue;
        }
        let novel = success_rate(ls)?.percent().unwrap_or(0.0);
        deltas.push(DeltaEntry {
            policy_id: policy.clone(),
            variation_id: vid.clone(),
            delta: delta_sr(&seen, novel)?,
            seen_ids,
            seen,
            novel,
        });
    }

    Ok(MetricReport {
        suite: manifest.suite.clone(),
        variations,
        intention,
        dgr: per_policy.iter().map(|(p, ls)| (p.clone(), dgr(ls))).collect(),
        delta_sr: deltas,
        avg_len: avg,
        matrices: matrices(manifest, &groups),
    })
}

/// One matrix per policy and family of state-intervention cells sharing
/// the same parent variation.
fn matrices(manifest: &SuiteManifest, groups: &Groups<'_>) -> Vec<DiagnosticMatrix> {
    let mut families: BTreeMap<(String, String, String), Vec<&Variation>> = BTreeMap::new();
    for e in manifest.eval_entries() {
        let v = &e.variation;
        if !v.perturbation.last().is_some_and(|p| p.axis == Axis::StateIntervention) {
            continue;
        }
        let parent = serde_json::to_string(&v.perturbation[..v.perturbation.len() - 1]).unwrap_or_default();
        for (policy, vid) in groups.keys() {
            if vid == &v.id {
                families.entry((policy.clone(), e.base_task_id.clone(), parent.clone())).or_default().push(v);
            }
        }
    }
    let mut out = Vec::new();
    for ((policy, base, _), vs) in families {
        let mut names = BTreeSet::new();
        for v in &vs {
            if let Some(p) = v.perturbation.last().and_then(|p| p.params.get("per_instance")).and_then(|p| p.as_object()) {
                names.extend(p.keys().cloned());
            }
        }
        if names.len() != 2 {
            continue;
        }
        let subjects: Vec<String> =
            vs[0].goal.subgoals.iter().filter_map(|s| s.subject().map(String::from)).collect();
        let mut pair: Vec<String> = names.into_iter().collect();
        pair.sort_by_key(|n| (subjects.iter().position(|s| s == n).unwrap_or(usize::MAX), n.clone()));
        let (row, col) = (&pair[0], &pair[1]);
        let mut labelled = Vec::new();
        for v in &vs {
            let Some((r, c)) = intervention_cell(v, row, col) else { continue };
            for l in groups.get(&(policy.clone(), v.id.clone())).into_iter().flatten() {
                labelled.push((r, c, classify_failure(l)));
            }
        }
        let name = format!("{base}: {}", vs[0].instruction);
        out.push(build_matrix(&name, &policy, row, col, &labelled));
    }
    out
}

fn pct(r: &Rate) -> String {
    match r.percent() {
        Some(p) => format!("{p:.1}"),
        None => "null".into(),
    }
}

fn state_label(s: InitialState) -> &'static str {
    match s {
        InitialState::OnTable => "on table",
        InitialState::InContainer => "in container",
        InitialState::Absent => "absent",
    }
}

/// One rectangular table: name, header, rows.
pub type Table = (String, Vec<String>, Vec<Vec<String>>);

fn strings<const N: usize>(a: [&str; N]) -> Vec<String> {
    a.iter().map(|s| s.to_string()).collect()
}

impl MetricReport {
    /// Canonical JSON: object keys sorted, two-space indent.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("reports serialize");
        let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema { path: "$".into(), reason: e.to_string() })
    }

    /// One table per metric family, ready to be written as CSV.
    pub fn tables(&self) -> Vec<Table> {
        let mut out = Vec::new();
        let mut header = strings(["policy", "variation", "axis", "tag", "episodes", "sr", "sr_den", "dgr", "dgr_den"]);
        header.extend(FailureMode::ALL.iter().map(|m| m.as_str().to_string()));
        let rows = self
            .variations
            .iter()
            .map(|v| {
                let mut r = alloc::vec![
                    v.policy_id.clone(),
                    v.variation_id.clone(),
                    v.axis.map(|a| format!("{a:?}")).unwrap_or_default(),
                    format!("{:?}", v.tag).to_lowercase(),
                    v.episodes.to_string(),
                    v.success.value.map(|x| x.to_string()).unwrap_or_default(),
                    v.success.denominator.to_string(),
                    v.dgr.value.map(|x| x.to_string()).unwrap_or_default(),
                    v.dgr.denominator.to_string(),
                ];
                r.extend(FailureMode::ALL.iter().map(|m| v.modes.get(m).copied().unwrap_or(0).to_string()));
                r
            })
            .collect();
        out.push(("variations".into(), header, rows));

        let rows = self
            .intention
            .iter()
            .map(|e| {
                alloc::vec![
                    e.policy_id.clone(),
                    e.variation_id.clone(),
                    e.target.clone(),
                    e.intention.value.map(|x| x.to_string()).unwrap_or_default(),
                    e.intention.denominator.to_string(),
                    e.success.value.map(|x| x.to_string()).unwrap_or_default(),
                ]
            })
            .collect();
        out.push(("intention".into(), strings(["policy", "variation", "target", "intention", "den", "sr"]), rows));

        let rows = self
            .dgr
            .iter()
            .map(|(p, r)| {
                alloc::vec![p.clone(), r.value.map(|x| x.to_string()).unwrap_or_default(), r.numerator.to_string(), r.denominator.to_string()]
            })
            .collect();
        out.push(("dgr".into(), strings(["policy", "dgr", "invalid", "den"]), rows));

        let rows = self
            .delta_sr
            .iter()
            .map(|d| {
                let seen: Vec<String> = d.seen.iter().map(|s| s.to_string()).collect();
                alloc::vec![d.policy_id.clone(), d.variation_id.clone(), seen.join(";"), d.novel.to_string(), d.delta.to_string()]
            })
            .collect();
        out.push(("delta_sr".into(), strings(["policy", "variation", "seen_sr", "novel_sr", "delta_sr"]), rows));

        let rows = self
            .avg_len
            .iter()
            .map(|a| {
                let rates: Vec<String> = a.rates.iter().map(|s| s.to_string()).collect();
                alloc::vec![a.policy_id.clone(), a.variation_id.clone(), rates.join(";"), a.avg_len.to_string()]
            })
            .collect();
        out.push(("avg_len".into(), strings(["policy", "variation", "chain_sr", "avg_len"]), rows));

        let mut rows = Vec::new();
        for m in &self.matrices {
            for (ri, r) in matrix_cell_order().iter().enumerate() {
                for (ci, c) in matrix_cell_order().iter().enumerate() {
                    let cell = &m.cells[ri][ci];
                    rows.push(alloc::vec![
                        m.policy_id.clone(),
                        m.name.clone(),
                        state_label(*r).into(),
                        state_label(*c).into(),
                        cell.modal.map(|x| x.as_str().to_string()).unwrap_or_default(),
                        cell.total().to_string(),
                    ]);
                }
            }
        }
        out.push(("matrices".into(), strings(["policy", "matrix", "row", "col", "modal", "episodes"]), rows));
        out
    }

    /// Plain-text tables.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Suite {}", self.suite);

        if !self.intention.is_empty() {
            let _ = writeln!(s, "\nIntention accuracy (%), first grasp on the instructed target; SR in brackets");
            let cols: BTreeSet<&str> = self.intention.iter().map(|e| e.variation_id.as_str()).collect();
            let policies: BTreeSet<&str> = self.intention.iter().map(|e| e.policy_id.as_str()).collect();
            let _ = write!(s, "{:<20}", "policy");
            for c in &cols {
                let _ = write!(s, " | {c:>22}");
            }
            s.push('\n');
            for p in &policies {
                let _ = write!(s, "{p:<20}");
                for c in &cols {
                    let cell = self.intention.iter().find(|e| e.policy_id == *p && e.variation_id == *c);
                    let txt = cell.map(|e| format!("{} [{}]", pct(&e.intention), pct(&e.success))).unwrap_or_else(|| "—".into());
                    let _ = write!(s, " | {txt:>22}");
                }
                s.push('\n');
            }
        }

        if !self.delta_sr.is_empty() {
            let _ = writeln!(s, "\nSubgoal composition: seen SR (%), novel SR (%), ΔSR");
            for d in &self.delta_sr {
                let seen: Vec<String> = d.seen.iter().map(|x| format!("{x:.1}")).collect();
                let _ = writeln!(s, "{:<20} {:<40} seen [{}] novel {:.1} Δ {:+.1}", d.policy_id, d.variation_id, seen.join(", "), d.novel, d.delta);
            }
        }

        if !self.dgr.is_empty() {
            let _ = writeln!(s, "\nDistractor grasp rate");
            for (p, r) in &self.dgr {
                let _ = writeln!(s, "{p:<20} {} ({}/{})", r.value.map(|v| format!("{v:.3}")).unwrap_or_else(|| "null".into()), r.numerator, r.denominator);
            }
        }

        if !self.avg_len.is_empty() {
            let _ = writeln!(s, "\nTasks completed in a row");
            for a in &self.avg_len {
                let rates: Vec<String> = a.rates.iter().map(|x| format!("{:.1}", x * 100.0)).collect();
                let _ = writeln!(s, "{:<20} {:<40} {} avg {:.3}", a.policy_id, a.variation_id, rates.join(" / "), a.avg_len);
            }
        }

        for m in &self.matrices {
            let _ = writeln!(s, "\n{} [{}] rows {} / cols {}", m.name, m.policy_id, m.row_instance, m.col_instance);
            let _ = write!(s, "{:<14}", "");
            for c in matrix_cell_order() {
                let _ = write!(s, " | {:<16}", state_label(c));
            }
            s.push('\n');
            for (ri, r) in matrix_cell_order().iter().enumerate() {
                let _ = write!(s, "{:<14}", state_label(*r));
                for cell in &m.cells[ri] {
                    let label = cell.modal.map(|x| x.as_str()).unwrap_or("—");
                    let _ = write!(s, " | {label:<16}");
                }
                s.push('\n');
            }
        }

        let _ = writeln!(s, "\nPer variation");
        for v in &self.variations {
            let modes: Vec<String> = v.modes.iter().map(|(m, n)| format!("{}={n}", m.as_str())).collect();
            let _ = writeln!(s, "{:<20} {:<40} SR {:>5} ({}) {}", v.policy_id, v.variation_id, pct(&v.success), v.success.denominator, modes.join(" "));
        }
        s
    }
}

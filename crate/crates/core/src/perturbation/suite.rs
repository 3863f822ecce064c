use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ops::apply_perturbation;
use super::{Axis, PerturbationSpec, Split, Variation};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::instantiation::AssetRecord;
use crate::seed;

/// One derived variation. `from` names an earlier entry of the same base
/// to start from; otherwise the base task is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub id: String,
    pub base: String,
    #[serde(default)]
    pub from: Option<String>,
    pub axis: Axis,
    #[serde(default)]
    pub params: serde_json::Value,
    pub tag: Split,
    /// Entry ids (of the same base) that count as training data.
    #[serde(default)]
    pub train: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub suite: String,
    #[serde(default)]
    pub entries: Vec<SuiteEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub base_task_id: String,
    pub axis: Option<Axis>,
    pub tag: Split,
    pub seed: u64,
    pub variation: Variation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub suite: String,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
    /// Eval entries per axis.
    pub axis_counts: BTreeMap<String, usize>,
}

impl SuiteManifest {
    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn eval_entries(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.tag == Split::Eval)
    }
}

fn qualified(base: &str, entry: &str) -> String {
    format!("{base}/{entry}")
}

/// Expands base tasks into the manifest described by `config`. Pure in
/// (bases, config, seed).
pub fn generate_suite(
    bases: &[Variation],
    config: &SuiteConfig,
    seed: u64,
    catalog: &[AssetRecord],
    cfg: &SimConfig,
) -> Result<SuiteManifest> {
    if bases.is_empty() {
        return Err(Error::Precondition("suite needs at least one base task".into()));
    }
    let mut entries: Vec<ManifestEntry> = Vec::new();
    for b in bases {
        let mut v = b.clone();
        v.train_eval_tag = Split::Train;
        v.train_set = alloc::vec![b.id.clone()];
        entries.push(ManifestEntry {
            id: b.id.clone(),
            base_task_id: b.id.clone(),
            axis: None,
            tag: Split::Train,
            seed: b.scene.seed,
            variation: v,
        });
    }

    for e in &config.entries {
        let base = bases
            .iter()
            .find(|b| b.id == e.base)
            .ok_or_else(|| Error::Precondition(format!("entry {} names unknown base {}", e.id, e.base)))?;
        let id = qualified(&base.id, &e.id);
        if entries.iter().any(|m| m.id == id) {
            return Err(Error::Precondition(format!("duplicate entry {id}")));
        }
        let start = match &e.from {
            None => base.clone(),
            Some(f) => {
                let fid = qualified(&base.id, f);
                entries
                    .iter()
                    .find(|m| m.id == fid)
                    .map(|m| m.variation.clone())
                    .ok_or_else(|| Error::Precondition(format!("entry {id} starts from unknown entry {fid}")))?
            }
        };
        let s = seed::derive(seed, &id);
        let spec = PerturbationSpec { axis: e.axis, params: e.params.clone(), seed: s };
        let mut v = apply_perturbation(&start, &spec, catalog, cfg)?;
        v.id = id.clone();
        v.base_task_id = base.id.clone();
        v.train_eval_tag = e.tag;
        entries.push(ManifestEntry { id, base_task_id: base.id.clone(), axis: Some(e.axis), tag: e.tag, seed: s, variation: v });
    }

    for i in 0..entries.len() {
        let base = entries[i].base_task_id.clone();
        if entries[i].axis.is_none() {
            continue;
        }
        let local = entries[i].id[base.len() + 1..].to_string();
        let explicit = config.entries.iter().find(|e| e.base == base && e.id == local).and_then(|e| e.train.clone());
        let set: Vec<String> = match explicit {
            Some(ids) => {
                let mut out = Vec::new();
                for t in ids {
                    let q = if t == base { t } else { qualified(&base, &t) };
                    if !entries.iter().any(|m| m.id == q) {
                        return Err(Error::Precondition(format!("train entry {q} does not exist")));
                    }
                    out.push(q);
                }
                out
            }
            None => entries
                .iter()
                .filter(|m| m.base_task_id == base && m.tag == Split::Train)
                .map(|m| m.id.clone())
                .collect(),
        };
        entries[i].variation.train_set = set;
    }

    let mut axis_counts = BTreeMap::new();
    for m in entries.iter().filter(|m| m.tag == Split::Eval) {
        if let Some(a) = m.axis {
            *axis_counts.entry(format!("{a:?}")).or_insert(0) += 1;
        }
    }
    Ok(SuiteManifest { suite: config.suite.clone(), seed, entries, axis_counts })
}

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::schema::{self, err};
use crate::error::{Error, Result};
use crate::types::{validate_object_spec, ObjectSpec, TaskTemplate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioInstance {
    pub scenario_name: String,
    pub instruction: String,
    pub scene_context: String,
    pub instantiation: BTreeMap<String, Vec<ObjectSpec>>,
}

impl ScenarioInstance {
    /// Specs in template group order, then instance order.
    pub fn specs_in_order<'a>(&'a self, t: &'a TaskTemplate) -> impl Iterator<Item = (&'a str, &'a ObjectSpec)> + 'a {
        t.object_groups.iter().flat_map(move |g| {
            self.instantiation
                .get(&g.group_id)
                .into_iter()
                .flatten()
                .map(move |s| (g.group_id.as_str(), s))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioRule {
    UnknownGroup,
    CountOutOfRange,
    DuplicateInstance,
    SpecInvalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioViolation {
    pub rule: ScenarioRule,
    pub subject: String,
}

impl fmt::Display for ScenarioViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match self.rule {
            ScenarioRule::UnknownGroup => "unknown_group",
            ScenarioRule::CountOutOfRange => "count_out_of_range",
            ScenarioRule::DuplicateInstance => "duplicate_instance",
            ScenarioRule::SpecInvalid => "spec_invalid",
        };
        write!(f, "{rule}:{:?}", self.subject)
    }
}

pub fn validate_scenario(s: &ScenarioInstance, t: &TaskTemplate) -> Vec<ScenarioViolation> {
    let mut out = Vec::new();
    let v = |rule, subject: &str| ScenarioViolation { rule, subject: subject.to_string() };
    for gid in s.instantiation.keys() {
        if t.group(gid).is_none() {
            out.push(v(ScenarioRule::UnknownGroup, gid));
        }
    }
    for g in &t.object_groups {
        let n = s.instantiation.get(&g.group_id).map_or(0, Vec::len) as u64;
        if n < u64::from(g.count_range[0]) || n > u64::from(g.count_range[1]) {
            out.push(v(ScenarioRule::CountOutOfRange, &g.group_id));
        }
    }
    let mut names = BTreeSet::new();
    for spec in s.instantiation.values().flatten() {
        if !names.insert(spec.instance_name.as_str()) {
            out.push(v(ScenarioRule::DuplicateInstance, &spec.instance_name));
        }
        if !validate_object_spec(spec).is_empty() {
            out.push(v(ScenarioRule::SpecInvalid, &spec.instance_name));
        }
    }
    out
}

/// Removes a surrounding markdown code fence, which models emit despite
/// being told not to.
fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let rest = rest.split_once('\n').map_or("", |(_, body)| body);
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

const SPEC_KEYS: &[&str] = &["instance_name", "asset_query", "estimated_mass", "estimated_size"];

/// Parses the designer's raw output: a single JSON list of scenarios.
pub fn parse_scenarios(text: &str) -> Result<Vec<ScenarioInstance>> {
    let v: Value = serde_json::from_str(strip_fences(text)).map_err(|e| err("$", e.to_string()))?;
    let list = v.as_array().ok_or_else(|| err("$", "expected a list of scenarios"))?;
    for (i, s) in list.iter().enumerate() {
        let p = format!("$[{i}]");
        let m = schema::object(s, &p)?;
        schema::keys(m, &p, &["scenario_name", "instruction", "scene_context", "instantiation"], &[])?;
        for k in ["scenario_name", "instruction", "scene_context"] {
            schema::string(m, &p, k)?;
        }
        let inst = schema::object(&m["instantiation"], &format!("{p}.instantiation"))?;
        for (gid, specs) in inst {
            let gp = format!("{p}.instantiation.{gid}");
            let specs = specs.as_array().ok_or_else(|| err(&gp, "expected array"))?;
            for (j, spec) in specs.iter().enumerate() {
                let sp = format!("{gp}[{j}]");
                let sm = schema::object(spec, &sp)?;
                schema::keys(sm, &sp, SPEC_KEYS, &["description", "tags"])?;
                for k in ["instance_name", "asset_query", "description"] {
                    schema::string(sm, &sp, k)?;
                }
                schema::number_pair(sm, &sp, "estimated_mass", false)?;
                schema::number_pair(sm, &sp, "estimated_size", false)?;
                schema::string_array(sm, &sp, "tags")?;
            }
        }
    }
    schema::decode(v, "$")
}

/// Where scenario text comes from: a remote model or canned fixtures.
pub trait ScenarioSource {
    /// Raw text holding a JSON list of at least `n` scenarios.
    fn fetch(&self, template: &TaskTemplate, n: usize, seed: u64) -> Result<String>;
}

pub fn instantiate_task(
    template: &TaskTemplate,
    n: usize,
    source: &dyn ScenarioSource,
    seed: u64,
) -> Result<Vec<ScenarioInstance>> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let text = source.fetch(template, n, seed)?;
    let mut all = parse_scenarios(&text).map_err(|e| Error::Source(e.to_string()))?;
    if all.len() < n {
        return Err(Error::Source(format!("expected {n} scenarios, got {}", all.len())));
    }
    all.truncate(n);
    for (index, s) in all.iter().enumerate() {
        let violations = validate_scenario(s, template);
        if !violations.is_empty() {
            return Err(Error::Validation { index, violations: violations.iter().map(|v| v.to_string()).collect() });
        }
    }
    Ok(all)
}

const DESIGNER_PROMPT: &str = include_str!("../../data/designer_prompt.txt");

/// The designer system prompt with the scenario count filled in and brace
/// escapes resolved, followed by the template document.
pub fn render_prompt(template: &TaskTemplate, n: usize) -> String {
    let body = DESIGNER_PROMPT
        .replace("{request.num_scenarios}", &n.to_string())
        .replace("{{", "{")
        .replace("}}", "}");
    let doc = serde_json::to_string_pretty(template).unwrap_or_default();
    format!("{}\n\n**Task Template:**\n{doc}\n", body.trim_end())
}

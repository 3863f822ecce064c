use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::ToString;
use serde_json::Value;

use super::schema::{self, err};
use crate::error::{Error, Result};
use crate::types::TaskTemplate;

const GROUP_REQUIRED: &[&str] = &["group_id", "description", "allowed_types", "count_range"];
const GROUP_OPTIONAL: &[&str] = &["role", "anchor_slots", "goal_slots", "destination", "articulation_goal"];

/// Parses and checks a task template document. Unknown fields are rejected.
pub fn parse_template(document: &str) -> Result<TaskTemplate> {
    let v: Value = serde_json::from_str(document).map_err(|e| err("$", e.to_string()))?;
    let top = schema::object(&v, "$")?;
    schema::keys(top, "$", &["meta", "constraint_template", "object_groups"], &[])?;
    let meta = schema::object(&top["meta"], "$.meta")?;
    schema::keys(meta, "$.meta", &["name", "task_description"], &[])?;
    schema::string(meta, "$.meta", "name")?;
    schema::string(meta, "$.meta", "task_description")?;
    if !top["constraint_template"].is_string() {
        return Err(err("$.constraint_template", "expected string"));
    }
    if !top["object_groups"].is_array() {
        return Err(err("$.object_groups", "expected array"));
    }
    for (i, g) in schema::array(top, "$", "object_groups")?.iter().enumerate() {
        let p = format!("$.object_groups[{i}]");
        let m = schema::object(g, &p)?;
        schema::keys(m, &p, GROUP_REQUIRED, GROUP_OPTIONAL)?;
        schema::string(m, &p, "group_id")?;
        schema::string(m, &p, "description")?;
        schema::string_array(m, &p, "allowed_types")?;
        if !m["allowed_types"].is_array() {
            return Err(err(&format!("{p}.allowed_types"), "expected array"));
        }
        schema::number_pair(m, &p, "count_range", true)?;
    }
    let t: TaskTemplate = schema::decode(v, "$")?;
    check_template(&t)?;
    Ok(t)
}

pub fn check_template(t: &TaskTemplate) -> Result<()> {
    if t.object_groups.is_empty() {
        return Err(Error::Invariant("template has no object groups".into()));
    }
    let mut seen = BTreeSet::new();
    for g in &t.object_groups {
        if !seen.insert(g.group_id.as_str()) {
            return Err(Error::Invariant(format!("duplicate group id {}", g.group_id)));
        }
        if g.count_range[0] > g.count_range[1] {
            return Err(Error::Invariant(format!("count_range of {} has min > max", g.group_id)));
        }
        if g.allowed_types.is_empty() {
            return Err(Error::Invariant(format!("allowed_types of {} is empty", g.group_id)));
        }
    }
    for g in &t.object_groups {
        let refs = g.destination.iter().chain(g.goal_slots.iter().map(|s| &s.reference));
        for r in refs {
            if t.group(r).is_none() {
                return Err(Error::Invariant(format!("{} references unknown group {r}", g.group_id)));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "meta": {"name": "Stack", "task_description": "Stack things."},
        "constraint_template": "RecursiveStacking",
        "object_groups": [
            {"group_id": "plates", "description": "Plates", "allowed_types": ["plate"], "count_range": [1, 1]}
        ]
    }"#;

    #[test]
    fn minimal_template_parses() {
        let t = parse_template(MINIMAL).unwrap();
        assert_eq!(t.object_groups.len(), 1);
        assert_eq!(t.meta.name, "Stack");
    }

    #[test]
    fn inverted_count_range_is_an_invariant_error() {
        let doc = MINIMAL.replace("[1, 1]", "[3, 2]");
        assert!(matches!(parse_template(&doc), Err(Error::Invariant(_))));
    }

    #[test]
    fn unknown_and_missing_fields_name_their_path() {
        let doc = MINIMAL.replace("\"description\": \"Plates\"", "\"descr\": \"Plates\"");
        match parse_template(&doc) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "$.object_groups[0].description"),
            other => panic!("{other:?}"),
        }
        let doc = MINIMAL.replace("\"count_range\": [1, 1]", "\"count_range\": [1, \"x\"]");
        match parse_template(&doc) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "$.object_groups[0].count_range[1]"),
            other => panic!("{other:?}"),
        }
        let doc = MINIMAL.replace("RecursiveStacking", "Juggling");
        assert!(matches!(parse_template(&doc), Err(Error::Schema { .. })));
    }
}

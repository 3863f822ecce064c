//! Shipped templates, fixtures, catalog, overrides and suites. Everything
//! is embedded in the binary; a data directory with the same layout can
//! replace it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use tabletop_core::instantiation::{parse_override, parse_template, AssetOverride, AssetRecord};
use tabletop_core::perturbation::SuiteConfig;
use tabletop_core::TaskTemplate;

use crate::{Failure, Result};

macro_rules! embedded {
    ($($key:literal),* $(,)?) => {
        /// Keys of the shipped task templates.
        pub const TEMPLATE_KEYS: &[&str] = &[$($key),*];

        fn embedded_template(key: &str) -> Option<&'static str> {
            match key {
                $($key => Some(include_str!(concat!("../data/templates/", $key, ".template.json"))),)*
                _ => None,
            }
        }

        fn embedded_fixture(key: &str, seed: u64) -> Option<&'static str> {
            match (key, seed) {
                $(($key, 7) => Some(include_str!(concat!("../data/fixtures/", $key, "/7.scenario.json"))),)*
                _ => None,
            }
        }
    };
}

embedded!("coffee", "fastfood", "fruit", "tidy", "meeting", "breakfast", "drawer", "cheeseburger", "seasoning", "plates");

const CATALOG: &str = include_str!("../data/assets/catalog.json");
const OVERRIDES: &[(&str, &str)] = &[(
    "bc2265fad6d9a6fc65d69d83bf2f6762",
    include_str!("../data/assets/overrides/bc2265fad6d9a6fc65d69d83bf2f6762.json"),
)];
const DEFAULT_SUITE: &str = include_str!("../data/suites/default.suite.json");

/// Where input data is read from.
#[derive(Debug, Clone, Default)]
pub struct Store {
    root: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::from(e).with("path", path.display().to_string()))
}

impl Store {
    pub fn embedded() -> Self {
        Self { root: None }
    }

    pub fn dir(root: impl Into<PathBuf>) -> Self {
        Self { root: Some(root.into()) }
    }

    /// A template by key, or by path when `key` names a file.
    pub fn template(&self, key: &str) -> Result<TaskTemplate> {
        let text = if key.ends_with(".json") {
            read(Path::new(key))?
        } else if let Some(r) = &self.root {
            read(&r.join("templates").join(format!("{key}.template.json")))?
        } else {
            embedded_template(key)
                .ok_or_else(|| Failure::new("precondition", format!("unknown template {key}")))?
                .to_string()
        };
        Ok(parse_template(&text)?)
    }

    pub fn fixture(&self, key: &str, seed: u64) -> Result<String> {
        match &self.root {
            Some(r) => read(&r.join("fixtures").join(key).join(format!("{seed}.scenario.json"))),
            None => embedded_fixture(key, seed)
                .map(str::to_string)
                .ok_or_else(|| Failure::new("source_error", format!("no fixture for {key} at seed {seed}"))),
        }
    }

    pub fn catalog(&self) -> Result<Vec<AssetRecord>> {
        let text = match &self.root {
            Some(r) => read(&r.join("assets").join("catalog.json"))?,
            None => CATALOG.to_string(),
        };
        let records: Vec<AssetRecord> = serde_json::from_str(&text)?;
        for r in &records {
            r.check()?;
        }
        Ok(records)
    }

    pub fn overrides(&self) -> Result<BTreeMap<String, AssetOverride>> {
        let mut out = BTreeMap::new();
        match &self.root {
            None => {
                for (uid, text) in OVERRIDES {
                    out.insert(uid.to_string(), parse_override(uid, text)?);
                }
            }
            Some(r) => {
                let dir = r.join("assets").join("overrides");
                if dir.is_dir() {
                    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
                    paths.sort();
                    for p in paths {
                        let Some(uid) = p.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_suffix(".json")) else {
                            continue;
                        };
                        out.insert(uid.to_string(), parse_override(uid, &read(&p)?)?);
                    }
                }
            }
        }
        Ok(out)
    }

    /// A suite config by name, or by path when `name` names a file.
    pub fn suite(&self, name: &str) -> Result<SuiteConfig> {
        let text = if name.ends_with(".json") {
            read(Path::new(name))?
        } else if let Some(r) = &self.root {
            read(&r.join("suites").join(format!("{name}.suite.json")))?
        } else if name == "default" {
            DEFAULT_SUITE.to_string()
        } else {
            return Err(Failure::new("precondition", format!("unknown suite {name}")));
        };
        Ok(serde_json::from_str(&text)?)
    }
}

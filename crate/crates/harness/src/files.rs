//! On-disk layout of harness outputs.

use std::path::{Path, PathBuf};

use crate::Result;

/// Writes through a sibling temporary file and a rename, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn episode_path(root: &Path, suite: &str, policy: &str, variation: &str, seed: u64) -> PathBuf {
    let mut p = root.join("runs").join(suite).join(policy);
    for part in variation.split('/') {
        p.push(part);
    }
    p.join(format!("{seed}.episode.jsonl"))
}

pub fn manifest_path(root: &Path) -> PathBuf {
    root.join("suite.manifest.json")
}

pub fn bases_dir(root: &Path) -> PathBuf {
    root.join("bases")
}

pub fn reports_dir(root: &Path) -> PathBuf {
    root.join("reports")
}

/// Every file under `dir` whose name ends with `suffix`, sorted.
pub fn find(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(suffix) && !n.starts_with('.')) {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

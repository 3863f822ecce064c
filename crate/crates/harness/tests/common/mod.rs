#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use tabletop::data::Store;
use tabletop::pipeline::{perturb, shipped_bases, Assets};
use tabletop_core::perturbation::SuiteManifest;
use tabletop_core::SimConfig;

pub fn manifest() -> &'static SuiteManifest {
    static M: OnceLock<SuiteManifest> = OnceLock::new();
    M.get_or_init(|| {
        let store = Store::embedded();
        let assets = Assets::load(&store).unwrap();
        let cfg = SimConfig::default();
        let bases = shipped_bases(&store, &assets, &cfg, 7).unwrap();
        perturb(&bases, &store, "default", &assets, &cfg, 7).unwrap()
    })
}

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// Compares `actual` with the file at `path`; rewrites it instead when
/// `TABLETOP_BLESS` is set.
pub fn check_golden(path: &Path, actual: &str) {
    if std::env::var_os("TABLETOP_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{} differs from the regenerated output", path.display());
}

//! Scenarios shipped with the crate.

use std::path::{Path, PathBuf};

use crate::scenario::Scenario;

pub const NAMES: [&str; 5] = ["client_monitor", "introduction", "both_ends", "serializer", "echo"];

pub fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn path(name: &str) -> PathBuf {
    dir().join(format!("{}.toml", name))
}

/// Loads a bundled scenario by name. Panics on unknown names.
pub fn load(name: &str) -> Scenario {
    Scenario::load(&path(name)).unwrap_or_else(|e| panic!("bundled scenario {}: {}", name, e))
}

//! `generate-synthetic`: planted-structure corpora with their ground truth.

use std::path::{Path, PathBuf};

use m2rec::synthetic::{generate, write_interactions, write_manifest, SyntheticSpec};

use super::{create_dir, write_json};
use crate::error::{CliError, CliResult};

pub const INTERACTIONS_FILE: &str = "interactions.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn load_spec(path: &Path) -> CliResult<SyntheticSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Writes `interactions.csv`, `manifest.json` and the effective spec into `out`.
pub fn run(spec: &SyntheticSpec, out: &Path) -> CliResult<(PathBuf, PathBuf)> {
    let corpus = generate(spec)?;
    create_dir(out)?;
    let interactions = out.join(INTERACTIONS_FILE);
    let manifest = out.join(MANIFEST_FILE);
    write_interactions(&corpus.records, &interactions)?;
    write_manifest(&corpus.manifest, &manifest)?;
    write_json(&out.join("synthetic_spec.json"), spec)?;
    Ok((interactions, manifest))
}

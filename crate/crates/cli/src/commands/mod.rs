//! One module per subcommand, plus the file helpers they share.

pub mod analyze;
pub mod compare;
pub mod evaluate;
pub mod prepare;
pub mod synthetic;
pub mod train;

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::{RunConfig, EFFECTIVE_CONFIG_FILE};
use crate::error::{CliError, CliResult};

/// Writes pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes one compact JSON document per line.
pub fn write_json_lines<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, row)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        out.write_all(b"\n").expect("writing to a Vec cannot fail");
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Creates the output directory and records the effective configuration in it.
pub fn echo_config(cfg: &RunConfig) -> CliResult<()> {
    create_dir(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join(EFFECTIVE_CONFIG_FILE), cfg)
}

/// Reads the split written by `prepare`.
pub fn load_split(cfg: &RunConfig) -> CliResult<m2rec::dataset::SplitCorpus> {
    let path = cfg.split_path();
    if !path.exists() {
        return Err(CliError::config(format!(
            "{} not found; run `m2rec prepare` first",
            path.display()
        )));
    }
    Ok(m2rec::dataset::read_split(&path)?)
}

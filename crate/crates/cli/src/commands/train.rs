//! `train`: grid search on validation recall@5, then the final fit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use m2rec::model::{load_model, save_model, train, EpochRecord, Hyperparams, M2Model, TrainOutcome};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, echo_config, load_split, write_json, write_json_lines};
use crate::config::{cell_key, RunConfig};
use crate::error::{CliError, CliResult};

pub const LEDGER_FILE: &str = "grid_ledger.json";
pub const TRAINING_LOG_FILE: &str = "training_log.jsonl";
pub const TIMING_FILE: &str = "training_times.jsonl";
pub const VALIDATION_MODEL_FILE: &str = "validation_model.json";

/// Outcome of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub hyperparams: Hyperparams,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub validation_recall_at_5: Option<f64>,
    pub trained_users: usize,
    pub skipped_users: usize,
}

/// Grid-search results keyed by combination, so merges do not depend on the
/// order in which cells finish.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridLedger {
    pub cells: BTreeMap<String, CellResult>,
    pub selected: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub selected: String,
    pub validation_recall_at_5: Option<f64>,
    pub best_epoch: usize,
    /// Cells trained in this run (the rest came from the ledger).
    pub cells_trained: usize,
    /// The final model was already on disk and was kept.
    pub final_model_reused: bool,
    pub final_epochs: usize,
}

#[derive(Serialize)]
struct EpochTime {
    epoch: usize,
    seconds: f64,
}

fn cell_result(outcome: &TrainOutcome) -> CellResult {
    CellResult {
        hyperparams: outcome.model.hyperparams.clone(),
        best_epoch: outcome.best_epoch,
        epochs_run: outcome.log.len(),
        validation_recall_at_5: outcome.best_validation_recall,
        trained_users: outcome.trained_users,
        skipped_users: outcome.skipped_users,
    }
}

fn write_logs(dir: &Path, stem: &str, outcome: &TrainOutcome) -> CliResult<()> {
    write_json_lines(&dir.join(format!("{stem}{TRAINING_LOG_FILE}")), &outcome.log)?;
    let times: Vec<EpochTime> = outcome
        .log
        .iter()
        .zip(&outcome.epoch_seconds)
        .map(|(r, &seconds)| EpochTime {
            epoch: r.epoch,
            seconds,
        })
        .collect();
    write_json_lines(&dir.join(format!("{stem}{TIMING_FILE}")), &times)
}

/// Reuses a model file when it holds exactly the wanted hyperparameters.
fn existing_model(path: &Path, hp: &Hyperparams) -> Option<M2Model> {
    load_model(path).ok().filter(|m| &m.hyperparams == hp)
}

pub fn run(cfg: &RunConfig, resume: bool) -> CliResult<TrainSummary> {
    let split = load_split(cfg)?;
    let cells = match &cfg.grid {
        Some(grid) => grid.combinations(&cfg.hyperparams)?,
        None => vec![cfg.hyperparams.clone()],
    };
    echo_config(cfg)?;
    let out = &cfg.output_dir;
    let grid_dir = out.join("grid");
    create_dir(&grid_dir)?;
    let ledger_path = out.join(LEDGER_FILE);

    let mut ledger = if resume && ledger_path.exists() {
        let text = std::fs::read_to_string(&ledger_path).map_err(|e| CliError::io(&ledger_path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::data(format!("{}: {e}", ledger_path.display())))?
    } else {
        GridLedger::default()
    };

    let pending: Vec<(usize, &Hyperparams)> = cells
        .iter()
        .enumerate()
        .filter(|(_, hp)| !ledger.cells.contains_key(&cell_key(hp)))
        .collect();
    let results: Vec<CliResult<(usize, TrainOutcome)>> = pending
        .par_iter()
        .map(|&(index, hp)| {
            let outcome = train(&split, hp)?;
            write_logs(&grid_dir, &format!("cell_{index:03}_"), &outcome)?;
            Ok((index, outcome))
        })
        .collect();
    let mut fresh: BTreeMap<String, TrainOutcome> = BTreeMap::new();
    for result in results {
        let (index, outcome) = result?;
        let key = cell_key(&cells[index]);
        ledger.cells.insert(key.clone(), cell_result(&outcome));
        fresh.insert(key, outcome);
    }

    // highest validation recall wins; ties keep the earlier grid cell
    let mut selected = 0;
    let score = |i: usize| {
        ledger.cells[&cell_key(&cells[i])]
            .validation_recall_at_5
            .unwrap_or(f64::NEG_INFINITY)
    };
    for i in 1..cells.len() {
        if score(i) > score(selected) {
            selected = i;
        }
    }
    let selected_key = cell_key(&cells[selected]);
    let chosen = ledger.cells[&selected_key].clone();
    ledger.selected = Some(selected_key.clone());
    write_json(&ledger_path, &ledger)?;

    // the selected configuration fitted on the training portion only
    let validation_path = out.join(VALIDATION_MODEL_FILE);
    let validation_model = match fresh.remove(&selected_key) {
        Some(outcome) => Some(outcome),
        None if existing_model(&validation_path, &cells[selected]).is_some() => None,
        None => Some(train(&split, &cells[selected])?),
    };
    if let Some(outcome) = &validation_model {
        save_model(&outcome.model, &validation_path)?;
    }

    let final_path: PathBuf = cfg.model_path();
    let (final_epochs, final_model_reused) = if cfg.retrain_on_validation {
        let final_hp = Hyperparams {
            epochs: chosen.best_epoch,
            ..cells[selected].clone()
        };
        if resume && existing_model(&final_path, &final_hp).is_some() {
            (final_hp.epochs, true)
        } else {
            let outcome = train(&split.merge_validation(), &final_hp)?;
            save_model(&outcome.model, &final_path)?;
            write_logs(out, "", &outcome)?;
            (final_hp.epochs, false)
        }
    } else {
        match validation_model {
            Some(outcome) => {
                save_model(&outcome.model, &final_path)?;
                write_logs(out, "", &outcome)?;
                (outcome.best_epoch, false)
            }
            None => (chosen.best_epoch, true),
        }
    };

    Ok(TrainSummary {
        selected: selected_key,
        validation_recall_at_5: chosen.validation_recall_at_5,
        best_epoch: chosen.best_epoch,
        cells_trained: pending.len(),
        final_model_reused,
        final_epochs,
    })
}

/// Reads a JSON-lines training log.
pub fn read_training_log(path: &Path) -> CliResult<Vec<EpochRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .map(|line| {
            serde_json::from_str(line).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
        })
        .collect()
}

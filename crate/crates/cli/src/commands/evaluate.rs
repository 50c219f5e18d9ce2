//! `evaluate`: multi-horizon reports for a trained model, a baseline or an ablation.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use m2rec::baselines::{Poep, Pop, PopularityTable};
use m2rec::dataset::SplitCorpus;
use m2rec::evaluation::{evaluate_horizon, EvalOptions, EvalReport, EvalTarget, MetricMeans};
use m2rec::model::{load_model, Layout, M2Params, M2Scorer, Variant};
use m2rec::ranking::Recommender;
use m2rec::synthetic::{read_manifest, BayesOracle};
use serde::Serialize;

use super::train::VALIDATION_MODEL_FILE;
use super::{create_dir, load_split, write_json};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Selector {
    /// Global popularity.
    Pop,
    /// Per-user popularity.
    Poep,
    /// The trained model, with its own variant.
    Model,
    /// Preferences only (alpha = 0); needs no model.
    UgpOnly,
    /// Transitions only (alpha = 1) on a trained model's parameters.
    TpiOnly,
    /// Bayes oracle from a synthetic corpus manifest.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    /// Test baskets, with validation baskets folded into the context.
    Test,
    /// Validation baskets, with the training baskets as context.
    Validation,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Test => "test",
            Protocol::Validation => "validation",
        }
    }
}

/// Where a scorer's inputs come from.
#[derive(Debug, Clone, Default)]
pub struct ScorerSource {
    pub model: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

/// The split a protocol scores on. Testing uses the merged layout, so items
/// first seen in validation are known to every scorer.
pub fn protocol_split(cfg: &RunConfig, protocol: Protocol) -> CliResult<(SplitCorpus, EvalTarget)> {
    let split = load_split(cfg)?;
    Ok(match protocol {
        Protocol::Test => (split.merge_validation(), EvalTarget::Test),
        Protocol::Validation => (split, EvalTarget::Validation),
    })
}

pub fn build_scorer(
    cfg: &RunConfig,
    selector: Selector,
    source: &ScorerSource,
    split: &SplitCorpus,
    protocol: Protocol,
) -> CliResult<Box<dyn Recommender>> {
    let load = || -> CliResult<m2rec::model::M2Model> {
        let path = source.model.clone().unwrap_or_else(|| match protocol {
            Protocol::Test => cfg.model_path(),
            Protocol::Validation => cfg.output_dir.join(VALIDATION_MODEL_FILE),
        });
        if !path.exists() {
            return Err(CliError::config(format!("model file {} does not exist", path.display())));
        }
        let model = load_model(&path)?;
        if !model.matches(split.vocabulary()) {
            return Err(CliError::data(format!(
                "{}: model vocabulary differs from the {} split",
                path.display(),
                protocol.as_str()
            )));
        }
        Ok(model)
    };
    Ok(match selector {
        Selector::Pop => Box::new(Pop {
            table: PopularityTable::from_corpora(&[&split.train]),
        }),
        Selector::Poep => Box::new(Poep),
        Selector::UgpOnly => {
            let params = M2Params::zeros(Layout::Transition, split.vocabulary().n(), 1);
            Box::new(M2Scorer::new(params, Variant::UgpOnly, cfg.hyperparams.gamma))
        }
        Selector::Model => {
            let model = load()?;
            Box::new(model.scorer(model.variant())?)
        }
        Selector::TpiOnly => Box::new(load()?.scorer(Variant::TpiOnly)?),
        Selector::Oracle => {
            let path = source
                .manifest
                .as_deref()
                .ok_or_else(|| CliError::config("the oracle needs --manifest"))?;
            Box::new(BayesOracle::new(read_manifest(path)?))
        }
    })
}

/// Aggregate part of a report; per-user rows go to CSV.
#[derive(Debug, Serialize)]
struct Aggregate<'a> {
    scorer: &'a str,
    protocol: &'a str,
    horizon: usize,
    ks: &'a [usize],
    evaluated_users: usize,
    means: &'a [MetricMeans],
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

pub fn write_user_csv(report: &EvalReport, path: &Path) -> CliResult<()> {
    let csv_err = |e: csv::Error| CliError::data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["user_id".to_string()];
    for metric in ["recall", "precision", "ndcg"] {
        header.extend(report.ks.iter().map(|k| format!("{metric}@{k}")));
    }
    header.extend(["ground_truth_size", "cold_items", "empty_context"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for u in &report.users {
        let mut row = vec![u.user_id.clone()];
        for values in [&u.recall, &u.precision, &u.ndcg] {
            row.extend(values.iter().map(|x| x.to_string()));
        }
        row.push(u.ground_truth_size.to_string());
        row.push(u.cold_items.to_string());
        row.push(u.empty_context.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn report_dir(cfg: &RunConfig, name: &str, protocol: Protocol) -> PathBuf {
    cfg.output_dir.join("eval").join(name).join(protocol.as_str())
}

/// Evaluates one scorer at every configured horizon and writes
/// `horizon_<h>.json` and `horizon_<h>_users.csv` per horizon.
pub fn run(
    cfg: &RunConfig,
    selector: Selector,
    source: &ScorerSource,
    protocol: Protocol,
    name: Option<&str>,
) -> CliResult<Vec<EvalReport>> {
    let (split, target) = protocol_split(cfg, protocol)?;
    let scorer = build_scorer(cfg, selector, source, &split, protocol)?;
    let name = name.map(String::from).unwrap_or_else(|| scorer.name());
    let dir = report_dir(cfg, &name, protocol);
    create_dir(&dir)?;

    let mut reports = Vec::new();
    for &horizon in &cfg.horizons {
        let mut report = evaluate_horizon(scorer.as_ref(), &split, target, horizon, &cfg.ks, &EvalOptions::default())?;
        report.scorer = name.clone();
        write_json(
            &dir.join(format!("horizon_{horizon}.json")),
            &Aggregate {
                scorer: &name,
                protocol: protocol.as_str(),
                horizon,
                ks: &report.ks,
                evaluated_users: report.evaluated_users,
                means: &report.means,
                note: report.note.as_deref(),
            },
        )?;
        write_user_csv(&report, &dir.join(format!("horizon_{horizon}_users.csv")))?;
        reports.push(report);
    }
    Ok(reports)
}

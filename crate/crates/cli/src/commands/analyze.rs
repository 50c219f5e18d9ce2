//! `analyze-diversity`, `analyze-transitions` and `export-embeddings`.

use std::path::Path;

use m2rec::dataset::ItemIndex;
use m2rec::evaluation::{
    diversity_report, export_embeddings, global_mean_cosine, history_for, similarity_report,
    transition_matrix, DiversityReport, SimilarityReport,
};
use m2rec::model::load_model;
use m2rec::ranking::Query;
use serde::Serialize;

use super::evaluate::{build_scorer, protocol_split, Protocol, ScorerSource, Selector};
use super::{create_dir, write_json};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct DiversityOutput {
    pub scorer: String,
    pub k: usize,
    pub users: usize,
    #[serde(flatten)]
    pub report: DiversityReport,
}

/// Where each test user's horizon-1 top-k falls among the training
/// popularity deciles.
pub fn diversity(cfg: &RunConfig, selector: Selector, source: &ScorerSource, k: usize) -> CliResult<DiversityOutput> {
    let (split, target) = protocol_split(cfg, Protocol::Test)?;
    let scorer = build_scorer(cfg, selector, source, &split, Protocol::Test)?;
    let vocabulary = split.vocabulary();
    let recommendations: Vec<Vec<ItemIndex>> = split
        .test
        .sequences
        .iter()
        .filter(|s| !s.baskets.is_empty())
        .map(|s| {
            let history = history_for(&split, target, s.user, 1);
            let query = Query {
                user_id: &split.user_ids()[s.user],
                history: &history,
                vocabulary,
            };
            scorer.recommend(&query, k).items
        })
        .collect();
    let output = DiversityOutput {
        scorer: scorer.name(),
        k,
        users: recommendations.len(),
        report: diversity_report(&recommendations, &split.train.item_counts()),
    };
    let dir = cfg.output_dir.join("analysis");
    create_dir(&dir)?;
    write_json(&dir.join(format!("diversity_{}.json", output.scorer)), &output)?;
    Ok(output)
}

#[derive(Debug, Serialize)]
pub struct TransitionOutput {
    pub window: usize,
    pub transitions: u64,
    pub global_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<SimilarityReport>,
}

/// Transition counts over training and validation baskets, with the mean
/// pairwise row cosine of an optional item cluster against all items.
pub fn transitions(cfg: &RunConfig, cluster: &[String], window: usize) -> CliResult<TransitionOutput> {
    let (split, _) = protocol_split(cfg, Protocol::Test)?;
    let histories: Vec<Vec<_>> = split
        .train
        .sequences
        .iter()
        .map(|s| s.baskets.iter().collect())
        .collect();
    let n = split.vocabulary().n();
    let t = transition_matrix(&histories, n, window);
    let cluster = if cluster.is_empty() {
        None
    } else {
        let items = cluster
            .iter()
            .map(|id| {
                split
                    .vocabulary()
                    .index_of(id)
                    .filter(|&i| (i as usize) < n)
                    .ok_or_else(|| CliError::config(format!("cluster item `{id}` is not a training item")))
            })
            .collect::<CliResult<Vec<_>>>()?;
        Some(similarity_report(&t, &items)?)
    };
    let output = TransitionOutput {
        window,
        transitions: t.total(),
        global_mean: global_mean_cosine(&t),
        cluster,
    };
    let dir = cfg.output_dir.join("analysis");
    create_dir(&dir)?;
    write_json(&dir.join("transitions.json"), &output)?;
    Ok(output)
}

/// Writes the encoder rows of a model as item embeddings.
pub fn embeddings(model_path: &Path, out: &Path) -> CliResult<usize> {
    if !model_path.exists() {
        return Err(CliError::config(format!("model file {} does not exist", model_path.display())));
    }
    let model = load_model(model_path)?;
    export_embeddings(&model.params, &model.item_ids, out)?;
    Ok(model.item_ids.len())
}

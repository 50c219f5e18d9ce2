use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{ndcg_at_k, precision_at_k, recall_at_k};
use crate::dataset::{Basket, Corpus, ItemIndex, SplitCorpus};
use crate::error::{Error, Result};
use crate::ranking::{Query, Recommender};

/// Highest horizon the protocol defines.
pub const MAX_HORIZON: usize = 3;

/// Which partition supplies the target baskets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTarget {
    /// Context is the training baskets.
    Validation,
    /// Context is the training and validation baskets.
    Test,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Drop cold items from the ground truth (users left with none are skipped).
    pub exclude_cold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user_id: String,
    pub horizon: usize,
    /// One entry per requested k, in the report's `ks` order.
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
    pub ndcg: Vec<f64>,
    /// Distinct ground-truth items, cold ones included unless excluded.
    pub ground_truth_size: usize,
    pub cold_items: usize,
    pub empty_context: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub k: usize,
    pub recall: f64,
    pub precision: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scorer: String,
    pub target: EvalTarget,
    pub horizon: usize,
    pub ks: Vec<usize>,
    pub evaluated_users: usize,
    pub means: Vec<MetricMeans>,
    pub users: Vec<UserMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EvalReport {
    pub fn mean(&self, k: usize) -> Option<&MetricMeans> {
        self.means.iter().find(|m| m.k == k)
    }
}

/// Baskets a user's recommendation may look at when predicting the
/// `horizon`-th basket of `target`, oldest first.
pub fn history_for<'a>(split: &'a SplitCorpus, target: EvalTarget, user: usize, horizon: usize) -> Vec<&'a Basket> {
    let mut history: Vec<&Basket> = Vec::new();
    let parts: &[&Corpus] = match target {
        EvalTarget::Validation => &[&split.train],
        EvalTarget::Test => &[&split.train, &split.validation],
    };
    for corpus in parts {
        if let Some(seq) = corpus.sequence_of(user) {
            history.extend(seq.baskets.iter());
        }
    }
    let targets = target_corpus(split, target);
    if let Some(seq) = targets.sequence_of(user) {
        history.extend(seq.baskets.iter().take(horizon.saturating_sub(1)));
    }
    history
}

fn target_corpus(split: &SplitCorpus, target: EvalTarget) -> &Corpus {
    match target {
        EvalTarget::Validation => &split.validation,
        EvalTarget::Test => &split.test,
    }
}

/// Scores every user with at least `horizon` target baskets on their
/// `horizon`-th one. Earlier target baskets join the context; the scorer's
/// parameters are not touched.
pub fn evaluate_horizon(
    scorer: &dyn Recommender,
    split: &SplitCorpus,
    target: EvalTarget,
    horizon: usize,
    ks: &[usize],
    options: &EvalOptions,
) -> Result<EvalReport> {
    if horizon == 0 || horizon > MAX_HORIZON {
        return Err(Error::config(format!(
            "horizon must be between 1 and {MAX_HORIZON}, got {horizon}"
        )));
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::config("k list must be non-empty and positive"));
    }
    let k_max = *ks.iter().max().unwrap();
    let vocabulary = split.vocabulary();
    let targets = target_corpus(split, target);

    let eligible: Vec<(usize, &Basket)> = targets
        .sequences
        .iter()
        .filter(|s| s.baskets.len() >= horizon)
        .map(|s| (s.user, &s.baskets[horizon - 1]))
        .collect();

    let users: Vec<UserMetrics> = eligible
        .par_iter()
        .filter_map(|&(user, basket)| {
            let cold_items = basket.unique_items().filter(|&i| vocabulary.is_cold(i)).count();
            let truth: Vec<ItemIndex> = basket
                .unique_items()
                .filter(|&i| !(options.exclude_cold && vocabulary.is_cold(i)))
                .collect();
            if truth.is_empty() {
                return None;
            }
            let history = history_for(split, target, user, horizon);
            let query = Query {
                user_id: &split.user_ids()[user],
                history: &history,
                vocabulary,
            };
            let rec = scorer.recommend(&query, k_max);
            Some(UserMetrics {
                user_id: query.user_id.to_string(),
                horizon,
                recall: ks.iter().map(|&k| recall_at_k(&rec.items, &truth, k)).collect(),
                precision: ks.iter().map(|&k| precision_at_k(&rec.items, &truth, k)).collect(),
                ndcg: ks.iter().map(|&k| ndcg_at_k(&rec.items, &truth, k)).collect(),
                ground_truth_size: truth.len(),
                cold_items,
                empty_context: rec.empty_context,
            })
        })
        .collect();

    let count = users.len();
    let mean_of = |pick: &dyn Fn(&UserMetrics) -> f64| -> f64 {
        if count == 0 {
            0.0
        } else {
            users.iter().map(pick).sum::<f64>() / count as f64
        }
    };
    let means = ks
        .iter()
        .enumerate()
        .map(|(pos, &k)| MetricMeans {
            k,
            recall: mean_of(&|u| u.recall[pos]),
            precision: mean_of(&|u| u.precision[pos]),
            ndcg: mean_of(&|u| u.ndcg[pos]),
        })
        .collect();
    let note = (count == 0).then(|| {
        format!("no user has {horizon} or more {target:?} baskets").to_lowercase()
    });

    Ok(EvalReport {
        scorer: scorer.name(),
        target,
        horizon,
        ks: ks.to_vec(),
        evaluated_users: count,
        means,
        users,
        note,
    })
}

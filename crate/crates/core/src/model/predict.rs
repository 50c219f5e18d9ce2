use std::sync::Arc;

use super::{forward, Hyperparams, M2Params, UserContext, Variant};
use crate::dataset::Vocabulary;
use crate::ranking::{recommend_from_scores, Query, Recommendation, Recommender};

/// Top-`k` items by blended score, ties to the lower index.
///
/// Users without history are scored on the transition or popularity path alone
/// and flagged; under `UGP_ONLY` they get an empty list.
pub fn predict_topk(params: &M2Params, variant: Variant, context: &UserContext, k: usize) -> Recommendation {
    if variant == Variant::UgpOnly && !context.has_history {
        return Recommendation {
            empty_context: true,
            truncated: k > 0,
            ..Recommendation::default()
        };
    }
    let trace = forward(params, variant, context);
    recommend_from_scores(&trace.r_hat, k, !context.has_history)
}

/// A trained model together with what is needed to score external data.
#[derive(Debug, Clone, PartialEq)]
pub struct M2Model {
    pub params: M2Params,
    pub hyperparams: Hyperparams,
    /// Trainable item ids, indexed like the parameter vectors.
    pub item_ids: Vec<String>,
}

impl M2Model {
    pub fn variant(&self) -> Variant {
        self.hyperparams.variant
    }

    /// Whether this model was trained against `vocabulary`.
    pub fn matches(&self, vocabulary: &Vocabulary) -> bool {
        vocabulary.trainable_ids() == self.item_ids.as_slice()
    }

    /// A scorer running the model as `variant`. The ablations accept a model
    /// with the transition layout.
    pub fn scorer(&self, variant: Variant) -> crate::Result<M2Scorer> {
        if variant.layout() != self.params.layout {
            return Err(crate::Error::config(format!(
                "a {} model cannot be evaluated as {variant}",
                self.variant()
            )));
        }
        Ok(M2Scorer {
            params: Arc::new(self.params.clone()),
            variant,
            gamma: self.hyperparams.gamma,
        })
    }
}

/// A read-only scorer usable from many threads.
#[derive(Debug, Clone)]
pub struct M2Scorer {
    pub params: Arc<M2Params>,
    pub variant: Variant,
    pub gamma: f64,
}

impl M2Scorer {
    pub fn new(params: M2Params, variant: Variant, gamma: f64) -> Self {
        M2Scorer {
            params: Arc::new(params),
            variant,
            gamma,
        }
    }

    pub fn context(&self, query: &Query<'_>) -> UserContext {
        UserContext::from_history(query.history, self.gamma, self.params.n)
    }
}

impl Recommender for M2Scorer {
    fn name(&self) -> String {
        self.variant.as_str().to_ascii_lowercase().replace('_', "-")
    }

    fn recommend(&self, query: &Query<'_>, k: usize) -> Recommendation {
        assert_eq!(
            query.vocabulary.n(),
            self.params.n,
            "scorer and vocabulary disagree on the item count"
        );
        predict_topk(&self.params, self.variant, &self.context(query), k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Layout, SparseVector};

    fn ctx(p: &[(u32, f64)], n: usize) -> UserContext {
        let v = SparseVector {
            n,
            entries: p.to_vec(),
        };
        UserContext {
            p: v.clone(),
            g: v,
            has_history: !p.is_empty(),
        }
    }

    #[test]
    fn preference_only_sorts_p() {
        let params = M2Params::zeros(Layout::Transition, 3, 2);
        let rec = predict_topk(&params, Variant::UgpOnly, &ctx(&[(0, 0.2), (1, 0.5), (2, 0.3)], 3), 2);
        assert_eq!(rec.items, vec![1, 2]);
        assert!(!rec.truncated);
    }

    #[test]
    fn oversized_k_is_flagged() {
        let params = M2Params::zeros(Layout::GP2, 4, 1);
        let rec = predict_topk(&params, Variant::GP2, &ctx(&[(2, 1.0)], 4), 9);
        assert_eq!(rec.items.len(), 4);
        assert!(rec.truncated);
        assert_eq!(rec.items[0], 2);
    }

    #[test]
    fn empty_context_uses_popularity_path() {
        let mut params = M2Params::zeros(Layout::P2, 3, 1);
        params.block_mut(crate::model::Block::V).copy_from_slice(&[0.0, 2.0, 1.0]);
        let rec = predict_topk(&params, Variant::P2, &ctx(&[], 3), 3);
        assert!(rec.empty_context);
        assert_eq!(rec.items, vec![1, 2, 0]);

        let rec = predict_topk(&M2Params::zeros(Layout::Transition, 3, 1), Variant::UgpOnly, &ctx(&[], 3), 3);
        assert!(rec.items.is_empty() && rec.empty_context);
    }
}

//! Frequency baselines: global popularity (POP) and per-user popularity (POEP).
//!
//! POEP ranks items by the user's own interaction counts, which is the same
//! ordering as the preference vector `p`; it doubles as an exact oracle for the
//! preference-only ablation.

use std::collections::BTreeMap;

use crate::dataset::{Basket, Corpus, ItemIndex};
use crate::ranking::{top_k, Query, Recommendation, Recommender};

/// Global interaction counts (multiplicity included) over trainable items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopularityTable {
    counts: Vec<u64>,
}

impl PopularityTable {
    pub fn new(counts: Vec<u64>) -> Self {
        PopularityTable { counts }
    }

    /// Sums the counts of several corpora sharing one vocabulary.
    pub fn from_corpora(corpora: &[&Corpus]) -> Self {
        let n = corpora.first().map(|c| c.n()).unwrap_or(0);
        let mut counts = vec![0u64; n];
        for corpus in corpora {
            for (total, c) in counts.iter_mut().zip(corpus.item_counts()) {
                *total += c;
            }
        }
        PopularityTable { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

fn rank_counts(counts: &[(ItemIndex, u64)], n: usize, k: usize) -> Vec<ItemIndex> {
    // dense scores keep the shared tie rule: higher count first, then lower index
    let mut scores = vec![0.0; n];
    for &(i, c) in counts {
        scores[i as usize] = c as f64;
    }
    top_k(&scores, k)
}

/// The `k` globally most frequent items.
pub fn pop_topk(table: &PopularityTable, k: usize) -> Vec<ItemIndex> {
    let counts: Vec<(ItemIndex, u64)> = table
        .counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as ItemIndex, c))
        .collect();
    rank_counts(&counts, table.counts.len(), k)
}

/// The user's `k` most frequent items; zero-count items fill the tail in index
/// order. An empty history gives an empty, flagged list.
pub fn poep_topk(history: &[&Basket], n: usize, k: usize) -> Recommendation {
    let mut counts: BTreeMap<ItemIndex, u64> = BTreeMap::new();
    for basket in history {
        for &(item, q) in &basket.items {
            if (item as usize) < n {
                *counts.entry(item).or_default() += q as u64;
            }
        }
    }
    if counts.is_empty() {
        return Recommendation {
            empty_context: true,
            truncated: k > 0,
            ..Recommendation::default()
        };
    }
    let counts: Vec<(ItemIndex, u64)> = counts.into_iter().collect();
    let items = rank_counts(&counts, n, k);
    let lookup = |i: ItemIndex| {
        counts
            .binary_search_by_key(&i, |&(j, _)| j)
            .map(|p| counts[p].1 as f64)
            .unwrap_or(0.0)
    };
    Recommendation {
        scores: items.iter().map(|&i| lookup(i)).collect(),
        truncated: items.len() < k,
        items,
        empty_context: false,
    }
}

/// POP as a [`Recommender`].
#[derive(Debug, Clone)]
pub struct Pop {
    pub table: PopularityTable,
}

impl Recommender for Pop {
    fn name(&self) -> String {
        "pop".into()
    }

    fn recommend(&self, _query: &Query<'_>, k: usize) -> Recommendation {
        let items = pop_topk(&self.table, k);
        Recommendation {
            scores: items.iter().map(|&i| self.table.counts[i as usize] as f64).collect(),
            truncated: items.len() < k,
            items,
            empty_context: false,
        }
    }
}

/// POEP as a [`Recommender`].
#[derive(Debug, Clone, Copy)]
pub struct Poep;

impl Recommender for Poep {
    fn name(&self) -> String {
        "poep".into()
    }

    fn recommend(&self, query: &Query<'_>, k: usize) -> Recommendation {
        poep_topk(query.history, query.vocabulary.n(), k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pop_orders_by_count() {
        let table = PopularityTable::new(vec![5, 9, 2]);
        assert_eq!(pop_topk(&table, 2), vec![1, 0]);
    }

    #[test]
    fn pop_ties_and_empty() {
        let table = PopularityTable::new(vec![3, 3]);
        assert_eq!(pop_topk(&table, 1), vec![0]);
        assert!(pop_topk(&table, 0).is_empty());
    }

    #[test]
    fn poep_uses_own_counts() {
        let b1 = Basket::from_items(0, &[0, 0]);
        let b2 = Basket::from_items(1, &[1]);
        let rec = poep_topk(&[&b1, &b2], 4, 1);
        assert_eq!(rec.items, vec![0]);
        let rec = poep_topk(&[&b1, &b2], 4, 4);
        assert_eq!(rec.items, vec![0, 1, 2, 3]);
        assert_eq!(rec.scores, vec![2.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn poep_empty_history_is_flagged() {
        let rec = poep_topk(&[], 3, 2);
        assert!(rec.items.is_empty());
        assert!(rec.empty_context);
    }
}

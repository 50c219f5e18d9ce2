//! Top-k selection and the common recommender interface.

use std::cmp::Ordering;

use crate::dataset::{Basket, ItemIndex, Vocabulary};

/// What a recommender sees for one user at one evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub user_id: &'a str,
    /// Baskets visible at prediction time, oldest first.
    pub history: &'a [&'a Basket],
    pub vocabulary: &'a Vocabulary,
}

/// A ranked list of trainable items.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Recommendation {
    pub items: Vec<ItemIndex>,
    pub scores: Vec<f64>,
    /// The user had no usable history.
    pub empty_context: bool,
    /// Fewer than `k` items could be returned.
    pub truncated: bool,
}

pub trait Recommender: Sync {
    fn name(&self) -> String;

    fn recommend(&self, query: &Query<'_>, k: usize) -> Recommendation;
}

/// Indices of the `k` largest scores, by descending score then ascending index.
pub fn top_k(scores: &[f64], k: usize) -> Vec<ItemIndex> {
    let order = |a: &ItemIndex, b: &ItemIndex| -> Ordering {
        scores[*b as usize]
            .partial_cmp(&scores[*a as usize])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    let mut idx: Vec<ItemIndex> = (0..scores.len() as ItemIndex).collect();
    if k == 0 {
        return Vec::new();
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, order);
        idx.truncate(k);
    }
    idx.sort_unstable_by(order);
    idx
}

/// Builds a [`Recommendation`] from a dense score vector.
pub fn recommend_from_scores(scores: &[f64], k: usize, empty_context: bool) -> Recommendation {
    let items = top_k(scores, k);
    Recommendation {
        scores: items.iter().map(|&i| scores[i as usize]).collect(),
        truncated: items.len() < k,
        items,
        empty_context,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_go_to_lower_index() {
        let mut scores = vec![0.0; 10];
        scores[3] = 1.0;
        scores[7] = 1.0;
        assert_eq!(top_k(&scores, 2), vec![3, 7]);
        assert_eq!(top_k(&scores, 1), vec![3]);
    }

    #[test]
    fn k_beyond_n_returns_everything() {
        let rec = recommend_from_scores(&[0.1, 0.3, 0.2], 8, false);
        assert_eq!(rec.items, vec![1, 2, 0]);
        assert!(rec.truncated);
        assert!(top_k(&[1.0], 0).is_empty());
    }

    proptest! {
        #[test]
        fn matches_full_sort(scores in prop::collection::vec(0u8..5, 1..40), k in 1usize..45) {
            let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
            let mut all: Vec<ItemIndex> = (0..scores.len() as ItemIndex).collect();
            all.sort_by(|a, b| scores[*b as usize].partial_cmp(&scores[*a as usize]).unwrap().then(a.cmp(b)));
            all.truncate(k);
            prop_assert_eq!(top_k(&scores, k), all);
        }
    }
}

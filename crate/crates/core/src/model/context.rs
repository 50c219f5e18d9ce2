use std::collections::BTreeMap;

use crate::dataset::{Basket, ItemIndex};

/// A length-`n` vector stored as sorted `(index, value)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub n: usize,
    pub entries: Vec<(ItemIndex, f64)>,
}

impl SparseVector {
    pub fn zeros(n: usize) -> Self {
        SparseVector {
            n,
            entries: Vec::new(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(i, x) in &self.entries {
            out[i as usize] = x;
        }
        out
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, x)| x * dense[i as usize]).sum()
    }

    pub fn get(&self, index: ItemIndex) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|&(_, x)| x).sum()
    }
}

/// Normalized interaction frequencies of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceVector {
    pub values: SparseVector,
    pub has_history: bool,
}

/// Time-decayed item occurrence counts of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryVector {
    pub values: SparseVector,
    pub context_length: usize,
}

/// `p_j = n_j / sum(n)`, where `n_j` counts every interaction with item `j`
/// (multiplicity included) across the history. Cold items (index `>= n`) are
/// ignored.
pub fn compute_preference(history: &[&Basket], n: usize) -> PreferenceVector {
    let mut counts: BTreeMap<ItemIndex, u64> = BTreeMap::new();
    for basket in history {
        for &(item, q) in &basket.items {
            if (item as usize) < n {
                *counts.entry(item).or_default() += q as u64;
            }
        }
    }
    let total: u64 = counts.values().sum();
    let entries = if total == 0 {
        Vec::new()
    } else {
        counts
            .into_iter()
            .map(|(i, c)| (i, c as f64 / total as f64))
            .collect()
    };
    PreferenceVector {
        values: SparseVector { n, entries },
        has_history: total > 0,
    }
}

/// `g_j = sum_t gamma^(T - t) * [j in basket t]`; presence only, multiplicity ignored.
pub fn compute_decayed_history(history: &[&Basket], gamma: f64, n: usize) -> HistoryVector {
    let t_len = history.len();
    let mut acc: BTreeMap<ItemIndex, f64> = BTreeMap::new();
    // oldest basket first; weight of basket t is gamma^(T - t)
    for (t, basket) in history.iter().enumerate() {
        let weight = gamma.powi((t_len - 1 - t) as i32);
        for item in basket.unique_items().filter(|&i| (i as usize) < n) {
            *acc.entry(item).or_default() += weight;
        }
    }
    HistoryVector {
        values: SparseVector {
            n,
            entries: acc.into_iter().collect(),
        },
        context_length: t_len,
    }
}

/// Everything the forward pass needs about a user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserContext {
    pub p: SparseVector,
    pub g: SparseVector,
    pub has_history: bool,
}

impl UserContext {
    pub fn from_history(history: &[&Basket], gamma: f64, n: usize) -> Self {
        let pref = compute_preference(history, n);
        let hist = compute_decayed_history(history, gamma, n);
        UserContext {
            p: pref.values,
            g: hist.values,
            has_history: pref.has_history,
        }
    }

    pub fn n(&self) -> usize {
        self.p.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A: ItemIndex = 0;
    const B: ItemIndex = 1;

    fn basket(items: &[ItemIndex]) -> Basket {
        Basket::from_items(0, items)
    }

    #[test]
    fn preference_counts_across_baskets() {
        let b1 = basket(&[A]);
        let b2 = basket(&[A, B]);
        let p = compute_preference(&[&b1, &b2], 3);
        assert!(p.has_history);
        let dense = p.values.to_dense();
        assert!((dense[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((dense[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(dense[2], 0.0);
    }

    #[test]
    fn preference_counts_multiplicity() {
        let b = basket(&[A, A, B]);
        let dense = compute_preference(&[&b], 3).values.to_dense();
        assert_eq!(dense, vec![2.0 / 3.0, 1.0 / 3.0, 0.0]);
    }

    #[test]
    fn empty_prefix_has_no_history() {
        let p = compute_preference(&[], 3);
        assert!(!p.has_history);
        assert_eq!(p.values.to_dense(), vec![0.0; 3]);
    }

    #[test]
    fn cold_only_history_has_no_history() {
        let b = basket(&[5]);
        assert!(!compute_preference(&[&b], 3).has_history);
    }

    #[test]
    fn decay_without_discount() {
        let b1 = basket(&[A]);
        let b2 = basket(&[A, B]);
        let g = compute_decayed_history(&[&b1, &b2], 1.0, 3);
        assert_eq!(g.values.to_dense(), vec![2.0, 1.0, 0.0]);
        assert_eq!(g.context_length, 2);
    }

    #[test]
    fn decay_halves_older_basket() {
        let b1 = basket(&[A]);
        let b2 = basket(&[B]);
        let g = compute_decayed_history(&[&b1, &b2], 0.5, 3);
        assert_eq!(g.values.to_dense(), vec![0.5, 1.0, 0.0]);
    }

    #[test]
    fn decay_uses_presence_not_count() {
        let b = basket(&[A, A]);
        assert_eq!(compute_decayed_history(&[&b], 0.7, 2).values.get(A), 1.0);
    }

    proptest! {
        #[test]
        fn later_occurrence_weighs_more(len in 2usize..12, pos in 0usize..11, gamma in 0.05f64..0.99) {
            let pos = pos % (len - 1);
            let mk = |at: usize| -> Vec<Basket> {
                (0..len).map(|t| if t == at { basket(&[A]) } else { basket(&[B]) }).collect()
            };
            let earlier = mk(pos);
            let later = mk(pos + 1);
            let e: Vec<&Basket> = earlier.iter().collect();
            let l: Vec<&Basket> = later.iter().collect();
            let ge = compute_decayed_history(&e, gamma, 2).values.get(A);
            let gl = compute_decayed_history(&l, gamma, 2).values.get(A);
            prop_assert!(ge < gl);
        }

        #[test]
        fn history_bounded_by_length(items in prop::collection::vec(prop::collection::vec(0u32..6, 1..4), 1..10), gamma in 0.01f64..=1.0) {
            let baskets: Vec<Basket> = items.iter().map(|b| basket(b)).collect();
            let refs: Vec<&Basket> = baskets.iter().collect();
            let g = compute_decayed_history(&refs, gamma, 6);
            let p = compute_preference(&refs, 6);
            prop_assert!((p.values.sum() - 1.0).abs() < 1e-12);
            for &(_, x) in &g.values.entries {
                prop_assert!(x > 0.0 && x <= refs.len() as f64 + 1e-12);
            }
        }
    }
}

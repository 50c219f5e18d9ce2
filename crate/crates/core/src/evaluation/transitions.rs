use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Basket, ItemIndex};
use crate::error::{Error, Result};

/// Counts of item `i` in an earlier basket followed by item `j` in a later one.
/// Stored as sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    rows: Vec<Vec<(ItemIndex, u64)>>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: ItemIndex, to: ItemIndex) -> u64 {
        let row = &self.rows[from as usize];
        row.binary_search_by_key(&to, |&(j, _)| j)
            .map(|p| row[p].1)
            .unwrap_or(0)
    }

    pub fn row(&self, from: ItemIndex) -> &[(ItemIndex, u64)] {
        &self.rows[from as usize]
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().flatten().map(|&(_, c)| c).sum()
    }

    fn norm(&self, i: ItemIndex) -> f64 {
        self.row(i).iter().map(|&(_, c)| (c as f64).powi(2)).sum::<f64>().sqrt()
    }

    /// Cosine similarity between two rows; 0 when either row is empty.
    pub fn cosine(&self, a: ItemIndex, b: ItemIndex) -> f64 {
        let (ra, rb) = (self.row(a), self.row(b));
        let (na, nb) = (self.norm(a), self.norm(b));
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        let (mut x, mut y, mut dot) = (0, 0, 0.0);
        while x < ra.len() && y < rb.len() {
            match ra[x].0.cmp(&rb[y].0) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    dot += ra[x].1 as f64 * rb[y].1 as f64;
                    x += 1;
                    y += 1;
                }
            }
        }
        dot / (na * nb)
    }
}

/// Counts transitions over every user history. With `window = 1` only adjacent
/// basket pairs count; a larger window also pairs each basket with up to
/// `window` baskets before it. Each pair of baskets contributes once per
/// distinct `(i, j)`. Cold items are skipped.
pub fn transition_matrix(histories: &[Vec<&Basket>], n: usize, window: usize) -> TransitionMatrix {
    let mut rows: Vec<BTreeMap<ItemIndex, u64>> = vec![BTreeMap::new(); n];
    let window = window.max(1);
    for history in histories {
        for t in 1..history.len() {
            let next = history[t];
            for prev in &history[t.saturating_sub(window)..t] {
                for i in prev.unique_items().filter(|&i| (i as usize) < n) {
                    for j in next.unique_items().filter(|&j| (j as usize) < n) {
                        *rows[i as usize].entry(j).or_default() += 1;
                    }
                }
            }
        }
    }
    TransitionMatrix {
        n,
        rows: rows.into_iter().map(|r| r.into_iter().collect()).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub cluster_size: usize,
    /// Mean pairwise row cosine inside the cluster.
    pub cluster_mean: f64,
    /// Mean pairwise row cosine over all items.
    pub global_mean: f64,
    pub ratio: f64,
}

/// Mean pairwise cosine over all `n (n - 1) / 2` pairs.
///
/// With unit-normalized rows `u_i`, `sum_{i != j} u_i . u_j = |sum u_i|^2 - sum |u_i|^2`,
/// which avoids the quadratic loop.
pub fn global_mean_cosine(t: &TransitionMatrix) -> f64 {
    let n = t.n();
    if n < 2 {
        return 0.0;
    }
    let mut sum = vec![0.0; n];
    let mut self_terms = 0.0;
    for i in 0..n as ItemIndex {
        let norm = t.norm(i);
        if norm == 0.0 {
            continue;
        }
        for &(j, c) in t.row(i) {
            sum[j as usize] += c as f64 / norm;
        }
        self_terms += 1.0;
    }
    let total: f64 = sum.iter().map(|x| x * x).sum();
    (total - self_terms) / (n * (n - 1)) as f64
}

pub fn similarity_report(t: &TransitionMatrix, cluster: &[ItemIndex]) -> Result<SimilarityReport> {
    let mut items = cluster.to_vec();
    items.sort_unstable();
    items.dedup();
    if items.len() < 2 {
        return Err(Error::contract("a cluster needs at least two distinct items"));
    }
    if let Some(&bad) = items.iter().find(|&&i| i as usize >= t.n()) {
        return Err(Error::contract(format!("item {bad} is outside the transition matrix")));
    }
    let mut acc = 0.0;
    let mut pairs = 0usize;
    for (x, &a) in items.iter().enumerate() {
        for &b in &items[x + 1..] {
            acc += t.cosine(a, b);
            pairs += 1;
        }
    }
    let cluster_mean = acc / pairs as f64;
    let global_mean = global_mean_cosine(t);
    Ok(SimilarityReport {
        cluster_size: items.len(),
        cluster_mean,
        global_mean,
        ratio: if global_mean == 0.0 { f64::NAN } else { cluster_mean / global_mean },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b(items: &[ItemIndex]) -> Basket {
        Basket::from_items(0, items)
    }

    #[test]
    fn counts_adjacent_pairs_across_users() {
        let (a, bb) = (b(&[0]), b(&[1]));
        let histories = vec![vec![&a, &bb], vec![&a, &bb]];
        let t = transition_matrix(&histories, 3, 1);
        assert_eq!(t.get(0, 1), 2);
        assert_eq!(t.total(), 2);
    }

    #[test]
    fn repeated_items_count_once_per_pair() {
        let (x, y) = (Basket::new(0, [(0, 3)]), Basket::new(1, [(1, 2)]));
        let t = transition_matrix(&[vec![&x, &y]], 2, 1);
        assert_eq!(t.get(0, 1), 1);
    }

    #[test]
    fn window_reaches_further_back() {
        let (x, y, z) = (b(&[0]), b(&[1]), b(&[2]));
        let h = vec![vec![&x, &y, &z]];
        assert_eq!(transition_matrix(&h, 3, 1).get(0, 2), 0);
        assert_eq!(transition_matrix(&h, 3, 2).get(0, 2), 1);
    }

    #[test]
    fn cosine_identical_and_orthogonal() {
        // rows 0 and 1 both go to item 2; row 3 goes to item 0
        let (p, q, r, s) = (b(&[0, 1]), b(&[2]), b(&[3]), b(&[0]));
        let t = transition_matrix(&[vec![&p, &q], vec![&r, &s]], 4, 1);
        assert!((t.cosine(0, 1) - 1.0).abs() < 1e-15);
        assert_eq!(t.cosine(0, 3), 0.0);
        assert_eq!(t.cosine(0, 2), 0.0);
    }

    #[test]
    fn global_identity_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let baskets: Vec<Basket> = (0..60)
            .map(|_| b(&(0..3).map(|_| rng.gen_range(0..12)).collect::<Vec<_>>()))
            .collect();
        let histories: Vec<Vec<&Basket>> = baskets.chunks(6).map(|c| c.iter().collect()).collect();
        let t = transition_matrix(&histories, 14, 1);
        let mut brute = 0.0;
        for i in 0..14 {
            for j in 0..14 {
                if i != j {
                    brute += t.cosine(i, j);
                }
            }
        }
        brute /= (14 * 13) as f64;
        assert!((global_mean_cosine(&t) - brute).abs() < 1e-12);
    }

    #[test]
    fn tiny_cluster_rejected() {
        let t = transition_matrix(&[], 3, 1);
        assert!(similarity_report(&t, &[1, 1]).is_err());
    }
}

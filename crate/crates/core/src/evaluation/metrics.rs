//! Binary-relevance ranking metrics.
//!
//! `ranked` is a recommendation list without repeats; `truth` is the set of
//! distinct ground-truth items, sorted ascending.

use crate::dataset::ItemIndex;

fn hits(ranked: &[ItemIndex], truth: &[ItemIndex], k: usize) -> usize {
    ranked
        .iter()
        .take(k)
        .filter(|i| truth.binary_search(i).is_ok())
        .count()
}

/// `|R_k ∩ S| / |S|`.
pub fn recall_at_k(ranked: &[ItemIndex], truth: &[ItemIndex], k: usize) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    hits(ranked, truth, k) as f64 / truth.len() as f64
}

/// `|R_k ∩ S| / k`; the denominator stays `k` even when fewer items were ranked.
pub fn precision_at_k(ranked: &[ItemIndex], truth: &[ItemIndex], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    hits(ranked, truth, k) as f64 / k as f64
}

/// DCG over hits at 1-based ranks `r` with gain `1 / log2(r + 1)`, divided by
/// the DCG of `min(k, |S|)` hits at the top.
pub fn ndcg_at_k(ranked: &[ItemIndex], truth: &[ItemIndex], k: usize) -> f64 {
    let ideal_hits = k.min(truth.len());
    if ideal_hits == 0 {
        return 0.0;
    }
    let discount = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| truth.binary_search(i).is_ok())
        .map(|(pos, _)| discount(pos + 1))
        .fold(0.0, |acc, g| acc + g);
    let idcg: f64 = (1..=ideal_hits).map(discount).sum();
    dcg / idcg
}

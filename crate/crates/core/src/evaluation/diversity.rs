use serde::{Deserialize, Serialize};

use crate::dataset::ItemIndex;
use crate::ranking::top_k;

pub const BUCKETS: usize = 10;

/// Share of recommendation slots per popularity decile, most frequent first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    /// Percentages; `buckets[0]` is the top 10% most frequent items.
    pub buckets: Vec<f64>,
    pub slots: usize,
    pub items: usize,
}

/// Decile of every item when items are ranked by descending frequency (ties to
/// the lower index). Each decile holds an equal share of the item ranks.
pub fn frequency_deciles(counts: &[u64]) -> Vec<usize> {
    let n = counts.len();
    let scores: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let order = top_k(&scores, n);
    let mut bucket = vec![0; n];
    for (rank, item) in order.into_iter().enumerate() {
        bucket[item as usize] = rank * BUCKETS / n;
    }
    bucket
}

pub fn diversity_report(recommendations: &[Vec<ItemIndex>], counts: &[u64]) -> DiversityReport {
    let deciles = frequency_deciles(counts);
    let mut tally = [0usize; BUCKETS];
    let mut slots = 0;
    for item in recommendations.iter().flatten() {
        if let Some(&b) = deciles.get(*item as usize) {
            tally[b] += 1;
            slots += 1;
        }
    }
    let buckets = tally
        .iter()
        .map(|&c| if slots == 0 { 0.0 } else { 100.0 * c as f64 / slots as f64 })
        .collect();
    DiversityReport {
        buckets,
        slots,
        items: counts.len(),
    }
}

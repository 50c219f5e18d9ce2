//! Interaction logs, basket sequences, frequency filters and train/validation/test splits.
//!
//! Items are addressed by dense `u32` indices into a [`Vocabulary`]. A vocabulary
//! has `n` trainable items (indices `0..n`); items first seen outside the training
//! baskets are appended after them and are called cold. Model vectors have
//! length `n`, so cold items can be carried in ground truth without ever being
//! scored.

mod corpus_file;
mod filter;
mod ingest;
mod split;

use std::collections::HashMap;
use std::sync::Arc;

pub use corpus_file::{read_corpus, read_split, write_corpus, write_split, FORMAT_VERSION};
pub use filter::{filter_corpus, FilterSpec};
pub use ingest::{assemble_baskets, parse_interactions, ParseOptions, ParseOutcome, RowError};
pub use split::{split_order, split_time, SplitCorpus, SplitKind, MIN_BASKETS_FOR_ORDER_SPLIT};

pub type ItemIndex = u32;

/// One row of a raw interaction log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionRecord {
    pub user_id: String,
    pub item_id: String,
    pub timestamp: i64,
    pub basket_key: Option<String>,
    pub quantity: u32,
}

impl InteractionRecord {
    pub fn new(user_id: &str, item_id: &str, timestamp: i64) -> Self {
        InteractionRecord {
            user_id: user_id.to_string(),
            item_id: item_id.to_string(),
            timestamp,
            basket_key: None,
            quantity: 1,
        }
    }

    pub fn with_quantity(mut self, quantity: u32) -> Self {
        self.quantity = quantity;
        self
    }

    pub fn with_basket(mut self, key: &str) -> Self {
        self.basket_key = Some(key.to_string());
        self
    }
}

/// A multiset of items bought or visited at one time.
///
/// `items` is sorted by index and holds each index once, with its multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basket {
    pub timestamp: i64,
    pub items: Vec<(ItemIndex, u32)>,
}

impl Basket {
    /// Builds a basket from `(item, multiplicity)` pairs, merging repeats.
    pub fn new(timestamp: i64, entries: impl IntoIterator<Item = (ItemIndex, u32)>) -> Self {
        let mut items: Vec<(ItemIndex, u32)> = entries.into_iter().collect();
        items.sort_unstable_by_key(|&(item, _)| item);
        items.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        Basket { timestamp, items }
    }

    /// Builds a basket where every listed occurrence counts once.
    pub fn from_items(timestamp: i64, items: &[ItemIndex]) -> Self {
        Basket::new(timestamp, items.iter().map(|&i| (i, 1)))
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Distinct items, ascending.
    pub fn unique_items(&self) -> impl Iterator<Item = ItemIndex> + '_ {
        self.items.iter().map(|&(item, _)| item)
    }

    pub fn contains(&self, item: ItemIndex) -> bool {
        self.items.binary_search_by_key(&item, |&(i, _)| i).is_ok()
    }

    /// Sum of multiplicities.
    pub fn total_quantity(&self) -> u64 {
        self.items.iter().map(|&(_, q)| q as u64).sum()
    }
}

/// The chronologically ordered baskets of one user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasketSequence {
    /// Index into the owning corpus' user table.
    pub user: usize,
    pub baskets: Vec<Basket>,
}

/// Bidirectional item id mapping.
///
/// Indices `0..train_item_count` are the trainable items, in ascending order of
/// their external ids. Cold items follow, also in ascending id order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    ids: Vec<String>,
    lookup: HashMap<String, ItemIndex>,
    train_item_count: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from trainable and cold ids. Both lists are sorted and
    /// deduplicated here; a cold id that is also trainable is dropped.
    pub fn new(mut trainable: Vec<String>, mut cold: Vec<String>) -> Self {
        trainable.sort_unstable();
        trainable.dedup();
        cold.sort_unstable();
        cold.dedup();
        let train_item_count = trainable.len();
        let mut ids = trainable;
        let mut lookup: HashMap<String, ItemIndex> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as ItemIndex))
            .collect();
        for id in cold {
            if !lookup.contains_key(&id) {
                lookup.insert(id.clone(), ids.len() as ItemIndex);
                ids.push(id);
            }
        }
        Vocabulary {
            ids,
            lookup,
            train_item_count,
        }
    }

    /// Number of trainable items.
    pub fn n(&self) -> usize {
        self.train_item_count
    }

    /// Trainable plus cold items.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<ItemIndex> {
        self.lookup.get(id).copied()
    }

    pub fn id_of(&self, index: ItemIndex) -> Option<&str> {
        self.ids.get(index as usize).map(String::as_str)
    }

    pub fn is_cold(&self, index: ItemIndex) -> bool {
        index as usize >= self.train_item_count
    }

    /// All ids in index order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn trainable_ids(&self) -> &[String] {
        &self.ids[..self.train_item_count]
    }
}

/// A set of user sequences over a shared user table and vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub user_ids: Arc<Vec<String>>,
    pub vocabulary: Arc<Vocabulary>,
    pub sequences: Vec<BasketSequence>,
}

impl Corpus {
    pub fn empty() -> Self {
        Corpus {
            user_ids: Arc::new(Vec::new()),
            vocabulary: Arc::new(Vocabulary::default()),
            sequences: Vec::new(),
        }
    }

    /// Number of users holding at least one basket.
    pub fn m(&self) -> usize {
        self.sequences.len()
    }

    /// Number of trainable items.
    pub fn n(&self) -> usize {
        self.vocabulary.n()
    }

    pub fn user_id(&self, user: usize) -> &str {
        &self.user_ids[user]
    }

    pub fn basket_count(&self) -> usize {
        self.sequences.iter().map(|s| s.baskets.len()).sum()
    }

    pub fn baskets(&self) -> impl Iterator<Item = &Basket> + '_ {
        self.sequences.iter().flat_map(|s| s.baskets.iter())
    }

    /// Sequence of a user, by user-table index.
    pub fn sequence_of(&self, user: usize) -> Option<&BasketSequence> {
        self.sequences
            .binary_search_by_key(&user, |s| s.user)
            .ok()
            .map(|pos| &self.sequences[pos])
    }

    /// Global interaction counts over trainable items, multiplicity included.
    pub fn item_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n()];
        for basket in self.baskets() {
            for &(item, q) in &basket.items {
                if let Some(c) = counts.get_mut(item as usize) {
                    *c += q as u64;
                }
            }
        }
        counts
    }

    pub fn statistics(&self) -> CorpusStatistics {
        let baskets = self.basket_count();
        let distinct_slots: usize = self.baskets().map(|b| b.items.len()).sum();
        let interactions: u64 = self.baskets().map(Basket::total_quantity).sum();
        let used_items = {
            let mut seen = vec![false; self.vocabulary.len()];
            for b in self.baskets() {
                for item in b.unique_items() {
                    seen[item as usize] = true;
                }
            }
            seen.into_iter().filter(|&s| s).count()
        };
        let ratio = |num: f64, den: usize| if den == 0 { 0.0 } else { num / den as f64 };
        CorpusStatistics {
            users: self.m(),
            items: used_items,
            baskets,
            interactions,
            items_per_basket: ratio(distinct_slots as f64, baskets),
            interactions_per_basket: ratio(interactions as f64, baskets),
            baskets_per_user: ratio(baskets as f64, self.m()),
        }
    }
}

/// Dataset summary in the shape of a dataset-statistics table.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorpusStatistics {
    pub users: usize,
    /// Distinct items that occur in at least one basket.
    pub items: usize,
    pub baskets: usize,
    pub interactions: u64,
    /// Mean number of distinct items per basket.
    pub items_per_basket: f64,
    pub interactions_per_basket: f64,
    pub baskets_per_user: f64,
}

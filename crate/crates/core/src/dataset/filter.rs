use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Basket, BasketSequence, Corpus, ItemIndex, Vocabulary};

/// Frequency thresholds. An entity is removed when it has strictly fewer than
/// the threshold; exactly the threshold survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSpec {
    pub min_items_per_user: u64,
    pub min_users_per_item: u64,
    pub min_baskets_per_user: u64,
    /// Count a user's distinct items instead of total interactions in step 1.
    pub distinct_items: bool,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            min_items_per_user: 0,
            min_users_per_item: 0,
            min_baskets_per_user: 2,
            distinct_items: false,
        }
    }
}

impl FilterSpec {
    pub fn new(min_items_per_user: u64, min_users_per_item: u64, min_baskets_per_user: u64) -> Self {
        FilterSpec {
            min_items_per_user,
            min_users_per_item,
            min_baskets_per_user,
            distinct_items: false,
        }
    }
}

/// Applies the three filters once each, in order: infrequent users, infrequent
/// items (with baskets emptied by that step removed), then users with too few
/// baskets. Users and items left without interactions are dropped from the
/// returned corpus' tables, keeping the relative order of the survivors.
pub fn filter_corpus(corpus: &Corpus, spec: &FilterSpec) -> Corpus {
    let n_total = corpus.vocabulary.len();

    // step 1: users with too few interactions
    let mut sequences: Vec<BasketSequence> = corpus
        .sequences
        .iter()
        .filter(|seq| {
            let count: u64 = if spec.distinct_items {
                seq.baskets
                    .iter()
                    .flat_map(|b| b.unique_items())
                    .collect::<HashSet<_>>()
                    .len() as u64
            } else {
                seq.baskets.iter().map(Basket::total_quantity).sum()
            };
            count >= spec.min_items_per_user
        })
        .cloned()
        .collect();

    // step 2: items with too few distinct users
    let mut users_per_item = vec![0u64; n_total];
    for seq in &sequences {
        let items: HashSet<ItemIndex> = seq.baskets.iter().flat_map(|b| b.unique_items()).collect();
        for item in items {
            users_per_item[item as usize] += 1;
        }
    }
    let keep_item: Vec<bool> = users_per_item
        .iter()
        .map(|&c| c >= spec.min_users_per_item)
        .collect();
    for seq in &mut sequences {
        for basket in &mut seq.baskets {
            basket.items.retain(|&(item, _)| keep_item[item as usize]);
        }
        seq.baskets.retain(|b| !b.is_empty());
    }
    sequences.retain(|seq| !seq.baskets.is_empty());

    // step 3: users with too few baskets
    sequences.retain(|seq| seq.baskets.len() as u64 >= spec.min_baskets_per_user);

    compact(corpus, sequences)
}

/// Rebuilds user and item tables so that only entities present in `sequences` remain.
fn compact(source: &Corpus, mut sequences: Vec<BasketSequence>) -> Corpus {
    let user_ids: Vec<String> = sequences
        .iter()
        .map(|s| source.user_ids[s.user].clone())
        .collect();

    let mut used = vec![false; source.vocabulary.len()];
    for seq in &sequences {
        for b in &seq.baskets {
            for item in b.unique_items() {
                used[item as usize] = true;
            }
        }
    }
    let mut remap = vec![ItemIndex::MAX; used.len()];
    let mut kept_ids = Vec::new();
    for (old, _) in used.iter().enumerate().filter(|(_, &u)| u) {
        remap[old] = kept_ids.len() as ItemIndex;
        kept_ids.push(source.vocabulary.ids()[old].clone());
    }
    // ids stay sorted, so the new vocabulary assigns the same order as `remap`
    let vocabulary = Vocabulary::new(kept_ids, Vec::new());

    for (new_user, seq) in sequences.iter_mut().enumerate() {
        seq.user = new_user;
        for basket in &mut seq.baskets {
            *basket = Basket::new(
                basket.timestamp,
                basket.items.iter().map(|&(i, q)| (remap[i as usize], q)),
            );
        }
    }

    Corpus {
        user_ids: Arc::new(user_ids),
        vocabulary: Arc::new(vocabulary),
        sequences,
    }
}

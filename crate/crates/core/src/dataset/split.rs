use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Basket, BasketSequence, Corpus, ItemIndex, Vocabulary};
use crate::error::{Error, Result};

/// Users need at least this many baskets to take part in an order-based split.
pub const MIN_BASKETS_FOR_ORDER_SPLIT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    /// Baskets at or before `train_end` train, at or before `valid_end` validate, the rest test.
    Time { train_end: i64, valid_end: i64 },
    /// Last basket tests, second-last validates, the rest train.
    Order,
}

/// Train, validation and test corpora over one user table and one vocabulary.
///
/// The vocabulary's trainable items are exactly the items of the training
/// baskets; validation and test items outside it are cold.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCorpus {
    pub train: Corpus,
    pub validation: Corpus,
    pub test: Corpus,
    pub kind: SplitKind,
    /// Set once validation baskets have been folded into training.
    pub merged: bool,
}

impl SplitCorpus {
    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.train.vocabulary
    }

    pub fn user_ids(&self) -> &Arc<Vec<String>> {
        &self.train.user_ids
    }

    /// Moves every validation basket into the training portion and rebuilds the
    /// vocabulary, so items first seen in validation become trainable. This is
    /// the layout used to retrain a selected configuration before testing.
    pub fn merge_validation(&self) -> SplitCorpus {
        let mut by_user: BTreeMap<usize, Vec<Basket>> = BTreeMap::new();
        for seq in self.train.sequences.iter().chain(&self.validation.sequences) {
            by_user
                .entry(seq.user)
                .or_default()
                .extend(seq.baskets.iter().cloned());
        }
        let train = by_user
            .into_iter()
            .map(|(user, mut baskets)| {
                baskets.sort_by_key(|b| b.timestamp);
                BasketSequence { user, baskets }
            })
            .collect();
        build(
            self.user_ids().clone(),
            self.vocabulary(),
            [train, Vec::new(), self.test.sequences.clone()],
            self.kind,
            true,
        )
    }
}

/// Splits by absolute cut-off times.
pub fn split_time(corpus: &Corpus, train_end: i64, valid_end: i64) -> Result<SplitCorpus> {
    if train_end >= valid_end {
        return Err(Error::config(format!(
            "training cut-off {train_end} must precede validation cut-off {valid_end}"
        )));
    }
    let mut parts: [Vec<BasketSequence>; 3] = Default::default();
    for seq in &corpus.sequences {
        let mut buckets: [Vec<Basket>; 3] = Default::default();
        for basket in &seq.baskets {
            let slot = if basket.timestamp <= train_end {
                0
            } else if basket.timestamp <= valid_end {
                1
            } else {
                2
            };
            buckets[slot].push(basket.clone());
        }
        for (part, baskets) in parts.iter_mut().zip(buckets) {
            if !baskets.is_empty() {
                part.push(BasketSequence {
                    user: seq.user,
                    baskets,
                });
            }
        }
    }
    Ok(build(
        corpus.user_ids.clone(),
        &corpus.vocabulary,
        parts,
        SplitKind::Time {
            train_end,
            valid_end,
        },
        false,
    ))
}

/// Splits each user's sequence by position. Users with fewer than
/// [`MIN_BASKETS_FOR_ORDER_SPLIT`] baskets are left out.
pub fn split_order(corpus: &Corpus) -> SplitCorpus {
    let mut parts: [Vec<BasketSequence>; 3] = Default::default();
    for seq in corpus
        .sequences
        .iter()
        .filter(|s| s.baskets.len() >= MIN_BASKETS_FOR_ORDER_SPLIT)
    {
        let t = seq.baskets.len();
        let pieces = [
            seq.baskets[..t - 2].to_vec(),
            vec![seq.baskets[t - 2].clone()],
            vec![seq.baskets[t - 1].clone()],
        ];
        for (part, baskets) in parts.iter_mut().zip(pieces) {
            part.push(BasketSequence {
                user: seq.user,
                baskets,
            });
        }
    }
    build(
        corpus.user_ids.clone(),
        &corpus.vocabulary,
        parts,
        SplitKind::Order,
        false,
    )
}

/// Re-indexes three partitions (expressed in `source` indices) against a
/// vocabulary built from the first one.
fn build(
    user_ids: Arc<Vec<String>>,
    source: &Vocabulary,
    parts: [Vec<BasketSequence>; 3],
    kind: SplitKind,
    merged: bool,
) -> SplitCorpus {
    let id = |item: ItemIndex| source.ids()[item as usize].clone();
    let items_of = |seqs: &[BasketSequence]| -> Vec<String> {
        seqs.iter()
            .flat_map(|s| s.baskets.iter())
            .flat_map(|b| b.unique_items())
            .map(id)
            .collect()
    };
    let trainable = items_of(&parts[0]);
    let mut rest = items_of(&parts[1]);
    rest.extend(items_of(&parts[2]));
    let vocabulary = Arc::new(Vocabulary::new(trainable, rest));

    let remap = |seqs: Vec<BasketSequence>| -> Corpus {
        let sequences = seqs
            .into_iter()
            .map(|seq| BasketSequence {
                user: seq.user,
                baskets: seq
                    .baskets
                    .into_iter()
                    .map(|b| {
                        Basket::new(
                            b.timestamp,
                            b.items.iter().map(|&(i, q)| {
                                (vocabulary.index_of(&source.ids()[i as usize]).unwrap(), q)
                            }),
                        )
                    })
                    .collect(),
            })
            .collect();
        Corpus {
            user_ids: user_ids.clone(),
            vocabulary: vocabulary.clone(),
            sequences,
        }
    };
    let [train, validation, test] = parts;
    SplitCorpus {
        train: remap(train),
        validation: remap(validation),
        test: remap(test),
        kind,
        merged,
    }
}

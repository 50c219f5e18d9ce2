//! Canonical JSON files for corpora and splits.
//!
//! A basket is written as `[timestamp, [item, multiplicity], ...]`. Output is
//! a pure function of the corpus, so identical inputs give identical bytes.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Basket, BasketSequence, Corpus, SplitCorpus, SplitKind, Vocabulary};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

struct BasketRepr<'a>(&'a Basket);

impl Serialize for BasketRepr<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.0.items.len() + 1))?;
        seq.serialize_element(&self.0.timestamp)?;
        for entry in &self.0.items {
            seq.serialize_element(entry)?;
        }
        seq.end()
    }
}

struct OwnedBasket(Basket);

impl<'de> Deserialize<'de> for OwnedBasket {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct BasketVisitor;

        impl<'de> Visitor<'de> for BasketVisitor {
            type Value = OwnedBasket;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("[timestamp, [item, multiplicity], ...]")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<OwnedBasket, A::Error> {
                let timestamp: i64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let mut items = Vec::new();
                while let Some(entry) = seq.next_element::<(u32, u32)>()? {
                    if entry.1 == 0 {
                        return Err(de::Error::custom("zero multiplicity"));
                    }
                    items.push(entry);
                }
                if items.is_empty() {
                    return Err(de::Error::custom("empty basket"));
                }
                Ok(OwnedBasket(Basket::new(timestamp, items)))
            }
        }

        deserializer.deserialize_seq(BasketVisitor)
    }
}

#[derive(Serialize)]
struct SequenceOut<'a> {
    user: usize,
    baskets: Vec<BasketRepr<'a>>,
}

#[derive(Deserialize)]
struct SequenceIn {
    user: usize,
    baskets: Vec<OwnedBasket>,
}

fn sequences_out(corpus: &Corpus) -> Vec<SequenceOut<'_>> {
    corpus
        .sequences
        .iter()
        .map(|s| SequenceOut {
            user: s.user,
            baskets: s.baskets.iter().map(BasketRepr).collect(),
        })
        .collect()
}

#[derive(Serialize)]
struct CorpusOut<'a> {
    format_version: u32,
    users: &'a [String],
    items: &'a [String],
    train_item_count: usize,
    sequences: Vec<SequenceOut<'a>>,
}

#[derive(Deserialize)]
struct CorpusIn {
    format_version: u32,
    users: Vec<String>,
    items: Vec<String>,
    train_item_count: usize,
    sequences: Vec<SequenceIn>,
}

#[derive(Serialize)]
struct SplitOut<'a> {
    format_version: u32,
    split: SplitKind,
    merged: bool,
    users: &'a [String],
    items: &'a [String],
    train_item_count: usize,
    train: Vec<SequenceOut<'a>>,
    validation: Vec<SequenceOut<'a>>,
    test: Vec<SequenceOut<'a>>,
}

#[derive(Deserialize)]
struct SplitIn {
    format_version: u32,
    split: SplitKind,
    merged: bool,
    users: Vec<String>,
    items: Vec<String>,
    train_item_count: usize,
    train: Vec<SequenceIn>,
    validation: Vec<SequenceIn>,
    test: Vec<SequenceIn>,
}

fn check_version(found: u32) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format_version {found} (expected {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

fn vocabulary_from(items: Vec<String>, train_item_count: usize) -> Result<Vocabulary> {
    if train_item_count > items.len() {
        return Err(Error::Format("train_item_count exceeds item table".into()));
    }
    let mut items = items;
    let cold = items.split_off(train_item_count);
    let vocab = Vocabulary::new(items.clone(), cold.clone());
    // the stored order must already be canonical
    if vocab.ids()[..train_item_count] != items[..] || vocab.ids()[train_item_count..] != cold[..] {
        return Err(Error::Format("item table is not in canonical order".into()));
    }
    Ok(vocab)
}

fn sequences_in(
    raw: Vec<SequenceIn>,
    users: usize,
    items: usize,
) -> Result<Vec<BasketSequence>> {
    let mut out: Vec<BasketSequence> = Vec::with_capacity(raw.len());
    for seq in raw {
        if seq.user >= users {
            return Err(Error::Format(format!("user index {} out of range", seq.user)));
        }
        if out.last().is_some_and(|prev| prev.user >= seq.user) {
            return Err(Error::Format("sequences must be sorted by user".into()));
        }
        let baskets: Vec<Basket> = seq.baskets.into_iter().map(|b| b.0).collect();
        if baskets
            .iter()
            .flat_map(|b| b.unique_items())
            .any(|i| i as usize >= items)
        {
            return Err(Error::Format(format!("item index out of range for user {}", seq.user)));
        }
        out.push(BasketSequence { user: seq.user, baskets });
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer(&mut writer, value)?;
    writer.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    write_json(
        path,
        &CorpusOut {
            format_version: FORMAT_VERSION,
            users: &corpus.user_ids,
            items: corpus.vocabulary.ids(),
            train_item_count: corpus.vocabulary.n(),
            sequences: sequences_out(corpus),
        },
    )
}

pub fn read_corpus(path: &Path) -> Result<Corpus> {
    let raw: CorpusIn = read_json(path)?;
    check_version(raw.format_version)?;
    let vocabulary = vocabulary_from(raw.items, raw.train_item_count)?;
    let sequences = sequences_in(raw.sequences, raw.users.len(), vocabulary.len())?;
    Ok(Corpus {
        user_ids: Arc::new(raw.users),
        vocabulary: Arc::new(vocabulary),
        sequences,
    })
}

pub fn write_split(split: &SplitCorpus, path: &Path) -> Result<()> {
    write_json(
        path,
        &SplitOut {
            format_version: FORMAT_VERSION,
            split: split.kind,
            merged: split.merged,
            users: split.user_ids(),
            items: split.vocabulary().ids(),
            train_item_count: split.vocabulary().n(),
            train: sequences_out(&split.train),
            validation: sequences_out(&split.validation),
            test: sequences_out(&split.test),
        },
    )
}

pub fn read_split(path: &Path) -> Result<SplitCorpus> {
    let raw: SplitIn = read_json(path)?;
    check_version(raw.format_version)?;
    let vocabulary = Arc::new(vocabulary_from(raw.items, raw.train_item_count)?);
    let users = Arc::new(raw.users);
    let part = |seqs: Vec<SequenceIn>| -> Result<Corpus> {
        Ok(Corpus {
            user_ids: users.clone(),
            vocabulary: vocabulary.clone(),
            sequences: sequences_in(seqs, users.len(), vocabulary.len())?,
        })
    };
    Ok(SplitCorpus {
        train: part(raw.train)?,
        validation: part(raw.validation)?,
        test: part(raw.test)?,
        kind: raw.split,
        merged: raw.merged,
    })
}

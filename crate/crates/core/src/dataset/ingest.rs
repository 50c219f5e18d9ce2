use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::sync::Arc;

use super::{Basket, BasketSequence, Corpus, InteractionRecord, ItemIndex, Vocabulary};
use crate::error::{Error, Result};

/// How to read a delimited interaction log.
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Field delimiter; detected from the header (tab if present, else comma) when `None`.
    pub delimiter: Option<u8>,
    /// Skip and tally malformed rows instead of aborting on the first one.
    pub lenient: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub records: Vec<InteractionRecord>,
    /// Rows rejected in lenient mode.
    pub skipped: Vec<RowError>,
}

struct Columns {
    user: usize,
    item: usize,
    timestamp: usize,
    basket: Option<usize>,
    quantity: Option<usize>,
}

impl Columns {
    fn locate(header: &csv::StringRecord) -> Result<Columns> {
        let find = |name: &str| header.iter().position(|h| h.trim() == name);
        let require = |name: &str| {
            find(name).ok_or_else(|| Error::config(format!("missing mandatory column `{name}`")))
        };
        Ok(Columns {
            user: require("user_id")?,
            item: require("item_id")?,
            timestamp: require("timestamp")?,
            basket: find("basket_id"),
            quantity: find("quantity"),
        })
    }

    fn record(&self, row: &csv::StringRecord) -> std::result::Result<InteractionRecord, String> {
        let field = |idx: usize, name: &str| {
            row.get(idx)
                .map(str::trim)
                .ok_or_else(|| format!("missing value for `{name}`"))
        };
        let user_id = field(self.user, "user_id")?;
        let item_id = field(self.item, "item_id")?;
        if user_id.is_empty() || item_id.is_empty() {
            return Err("empty user_id or item_id".to_string());
        }
        let raw_ts = field(self.timestamp, "timestamp")?;
        let timestamp: i64 = raw_ts
            .parse()
            .map_err(|_| format!("unparseable timestamp `{raw_ts}`"))?;
        if timestamp < 0 {
            return Err(format!("negative timestamp {timestamp}"));
        }
        let basket_key = match self.basket {
            Some(idx) => match row.get(idx).map(str::trim) {
                Some(key) if !key.is_empty() => Some(key.to_string()),
                _ => None,
            },
            None => None,
        };
        let quantity = match self.quantity.and_then(|idx| row.get(idx)).map(str::trim) {
            None | Some("") => 1,
            Some(raw) => match raw.parse::<u32>() {
                Ok(q) if q >= 1 => q,
                _ => return Err(format!("quantity must be a positive integer, got `{raw}`")),
            },
        };
        Ok(InteractionRecord {
            user_id: user_id.to_string(),
            item_id: item_id.to_string(),
            timestamp,
            basket_key,
            quantity,
        })
    }
}

/// Reads a delimited interaction log with a header row.
///
/// Mandatory columns are `user_id`, `item_id` and `timestamp` (integer seconds);
/// `basket_id` and `quantity` are optional.
pub fn parse_interactions<R: Read>(input: R, options: &ParseOptions) -> Result<ParseOutcome> {
    let mut buffered = BufReader::new(input);
    let delimiter = match options.delimiter {
        Some(d) => d,
        None => {
            let head = buffered
                .fill_buf()
                .map_err(|e| Error::Format(format!("cannot read input: {e}")))?;
            let first_line = head.split(|&b| b == b'\n').next().unwrap_or(&[]);
            if first_line.contains(&b'\t') {
                b'\t'
            } else {
                b','
            }
        }
    };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(buffered);
    let header = reader.headers()?.clone();
    let columns = Columns::locate(&header)?;

    let mut outcome = ParseOutcome::default();
    for row in reader.records() {
        let (line, parsed) = match row {
            Ok(row) => {
                let line = row.position().map(|p| p.line()).unwrap_or(0);
                (line, columns.record(&row))
            }
            Err(err) => {
                let line = err.position().map(|p| p.line()).unwrap_or(0);
                (line, Err(err.to_string()))
            }
        };
        match parsed {
            Ok(record) => outcome.records.push(record),
            Err(message) if options.lenient => outcome.skipped.push(RowError { line, message }),
            Err(message) => return Err(Error::Row { line, message }),
        }
    }
    Ok(outcome)
}

/// Groups records into per-user basket sequences.
///
/// Records share a basket when they agree on `(user_id, basket_key)`, or on
/// `(user_id, timestamp)` when no key is given. A keyed basket takes the earliest
/// timestamp of its records. Baskets are sorted by timestamp; equal timestamps
/// keep the order in which their baskets first appeared. The returned corpus'
/// vocabulary holds every item as trainable.
pub fn assemble_baskets(records: &[InteractionRecord]) -> Corpus {
    if records.is_empty() {
        return Corpus::empty();
    }

    let mut user_ids: Vec<String> = records.iter().map(|r| r.user_id.clone()).collect();
    user_ids.sort_unstable();
    user_ids.dedup();
    let vocabulary = Vocabulary::new(records.iter().map(|r| r.item_id.clone()).collect(), Vec::new());
    let user_index: HashMap<&str, usize> = user_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    #[derive(Hash, PartialEq, Eq)]
    enum Key<'a> {
        Explicit(&'a str),
        Time(i64),
    }

    struct Pending {
        timestamp: i64,
        entries: Vec<(ItemIndex, u32)>,
    }

    // per user: basket key -> slot in first-appearance order
    let mut slots: Vec<HashMap<Key<'_>, usize>> = (0..user_ids.len()).map(|_| HashMap::new()).collect();
    let mut pending: Vec<Vec<Pending>> = (0..user_ids.len()).map(|_| Vec::new()).collect();

    for record in records {
        let user = user_index[record.user_id.as_str()];
        let key = match &record.basket_key {
            Some(k) => Key::Explicit(k.as_str()),
            None => Key::Time(record.timestamp),
        };
        let item = vocabulary
            .index_of(&record.item_id)
            .expect("vocabulary built from the same records");
        let user_pending = &mut pending[user];
        let slot = *slots[user].entry(key).or_insert_with(|| {
            user_pending.push(Pending {
                timestamp: record.timestamp,
                entries: Vec::new(),
            });
            user_pending.len() - 1
        });
        let basket = &mut user_pending[slot];
        basket.timestamp = basket.timestamp.min(record.timestamp);
        basket.entries.push((item, record.quantity));
    }

    let sequences = pending
        .into_iter()
        .enumerate()
        .filter(|(_, baskets)| !baskets.is_empty())
        .map(|(user, mut baskets)| {
            // stable: ties keep first-appearance order
            baskets.sort_by_key(|b| b.timestamp);
            BasketSequence {
                user,
                baskets: baskets
                    .into_iter()
                    .map(|b| Basket::new(b.timestamp, b.entries))
                    .collect(),
            }
        })
        .collect();

    Corpus {
        user_ids: Arc::new(user_ids),
        vocabulary: Arc::new(vocabulary),
        sequences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, lenient: bool) -> Result<ParseOutcome> {
        parse_interactions(
            text.as_bytes(),
            &ParseOptions {
                delimiter: None,
                lenient,
            },
        )
    }

    #[test]
    fn parses_minimal_row() {
        let out = parse("user_id,item_id,timestamp\nu1,iA,100\n", false).unwrap();
        assert_eq!(out.records, vec![InteractionRecord::new("u1", "iA", 100)]);
        assert!(out.skipped.is_empty());
    }

    #[test]
    fn strict_mode_reports_line_of_bad_timestamp() {
        let err = parse("user_id,item_id,timestamp\nu1,iA,100\nu1,iA,notatime\n", false).unwrap_err();
        match err {
            Error::Row { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("notatime"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn lenient_mode_skips_and_counts() {
        let out = parse(
            "user_id,item_id,timestamp\nu1,iA,100\nu1,iB,oops\nu2,iA,7\n",
            true,
        )
        .unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].line, 3);
    }

    #[test]
    fn missing_mandatory_column_is_config_error() {
        let err = parse("user_id,item_id\nu1,iA\n", false).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("timestamp"));
    }

    #[test]
    fn detects_tab_delimiter_and_optional_columns() {
        let text = "user_id\titem_id\ttimestamp\tbasket_id\tquantity\nu1\tiA\t5\tb9\t3\n";
        let out = parse(text, false).unwrap();
        assert_eq!(
            out.records,
            vec![InteractionRecord::new("u1", "iA", 5)
                .with_basket("b9")
                .with_quantity(3)]
        );
    }

    #[test]
    fn zero_quantity_is_rejected() {
        let err = parse("user_id,item_id,timestamp,quantity\nu1,iA,5,0\n", false).unwrap_err();
        assert!(matches!(err, Error::Row { line: 2, .. }));
    }

    #[test]
    fn groups_by_timestamp() {
        let corpus = assemble_baskets(&[
            InteractionRecord::new("u1", "iA", 100),
            InteractionRecord::new("u1", "iB", 100),
            InteractionRecord::new("u1", "iA", 200),
        ]);
        assert_eq!(corpus.m(), 1);
        let seq = &corpus.sequences[0];
        let a = corpus.vocabulary.index_of("iA").unwrap();
        let b = corpus.vocabulary.index_of("iB").unwrap();
        assert_eq!(seq.baskets.len(), 2);
        assert_eq!(seq.baskets[0], Basket::from_items(100, &[a, b]));
        assert_eq!(seq.baskets[1], Basket::from_items(200, &[a]));
    }

    #[test]
    fn quantity_becomes_multiplicity() {
        let corpus = assemble_baskets(&[InteractionRecord::new("u1", "iA", 100).with_quantity(3)]);
        assert_eq!(corpus.sequences[0].baskets[0].items, vec![(0, 3)]);
    }

    #[test]
    fn interleaved_users_are_sorted_independently() {
        let corpus = assemble_baskets(&[
            InteractionRecord::new("u2", "iA", 30),
            InteractionRecord::new("u1", "iB", 20),
            InteractionRecord::new("u2", "iB", 10),
            InteractionRecord::new("u1", "iA", 5),
        ]);
        assert_eq!(corpus.m(), 2);
        for seq in &corpus.sequences {
            let times: Vec<i64> = seq.baskets.iter().map(|b| b.timestamp).collect();
            let mut sorted = times.clone();
            sorted.sort();
            assert_eq!(times, sorted);
        }
        assert_eq!(corpus.user_id(corpus.sequences[0].user), "u1");
        assert_eq!(corpus.sequences[1].baskets.len(), 2);
    }

    #[test]
    fn explicit_keys_split_same_timestamp_in_file_order() {
        let corpus = assemble_baskets(&[
            InteractionRecord::new("u1", "iB", 50).with_basket("second"),
            InteractionRecord::new("u1", "iA", 50).with_basket("first"),
            InteractionRecord::new("u1", "iC", 50).with_basket("second"),
        ]);
        let seq = &corpus.sequences[0];
        assert_eq!(seq.baskets.len(), 2);
        // "second" appeared first in the file
        assert_eq!(seq.baskets[0].items.len(), 2);
        assert_eq!(seq.baskets[1].items.len(), 1);
    }

    #[test]
    fn empty_input_gives_empty_corpus() {
        let corpus = assemble_baskets(&[]);
        assert_eq!(corpus.m(), 0);
        assert_eq!(corpus.n(), 0);
    }
}

//! `prepare`: raw log to canonical corpus, split and statistics.

use m2rec::dataset::{
    assemble_baskets, filter_corpus, parse_interactions, split_order, split_time, write_corpus,
    write_split, CorpusStatistics, ParseOptions, SplitCorpus, SplitKind,
};
use serde::Serialize;

use super::{echo_config, write_json};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct SkippedRow {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct PrepareReport {
    pub raw: CorpusStatistics,
    pub filtered: CorpusStatistics,
    pub train: CorpusStatistics,
    pub validation: CorpusStatistics,
    pub test: CorpusStatistics,
    pub cold_items: usize,
    pub skipped_rows: Vec<SkippedRow>,
}

pub fn run(cfg: &RunConfig) -> CliResult<PrepareReport> {
    let input = cfg.interactions()?;
    let file = std::fs::File::open(input).map_err(|e| CliError::io(input, e))?;
    let options = ParseOptions {
        delimiter: None,
        lenient: cfg.lenient,
    };
    let parsed = parse_interactions(file, &options).map_err(|e| match e {
        m2rec::Error::Row { line, message } => {
            CliError::data(format!("{}: line {line}: {message}", input.display()))
        }
        other => other.into(),
    })?;
    if parsed.records.is_empty() {
        return Err(CliError::data(format!("{}: no interactions", input.display())));
    }

    let raw = assemble_baskets(&parsed.records);
    let filtered = filter_corpus(&raw, &cfg.filter);
    if filtered.m() == 0 {
        return Err(CliError::data("no user survives the filters"));
    }
    let split: SplitCorpus = match cfg.split {
        SplitKind::Time { train_end, valid_end } => split_time(&filtered, train_end, valid_end)?,
        SplitKind::Order => split_order(&filtered),
    };

    echo_config(cfg)?;
    write_corpus(&filtered, &cfg.output_dir.join("corpus.json"))?;
    write_split(&split, &cfg.split_path())?;
    let report = PrepareReport {
        raw: raw.statistics(),
        filtered: filtered.statistics(),
        train: split.train.statistics(),
        validation: split.validation.statistics(),
        test: split.test.statistics(),
        cold_items: split.vocabulary().len() - split.vocabulary().n(),
        skipped_rows: parsed
            .skipped
            .into_iter()
            .map(|r| SkippedRow {
                line: r.line,
                message: r.message,
            })
            .collect(),
    };
    write_json(&cfg.output_dir.join("statistics.json"), &report)?;
    Ok(report)
}

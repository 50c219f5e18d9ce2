//! `compare`: paired significance tests between two per-user reports.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use m2rec::evaluation::paired_t_test;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Per-user metric columns of one report.
#[derive(Debug, Clone, PartialEq)]
pub struct UserTable {
    pub columns: Vec<String>,
    pub rows: BTreeMap<String, Vec<f64>>,
}

fn is_metric(column: &str) -> bool {
    column.contains('@')
}

pub fn read_user_table(path: &Path) -> CliResult<UserTable> {
    let err = |e: csv::Error| CliError::data(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => CliError::config(format!("{}: {e}", path.display())),
        _ => err(e),
    })?;
    let header = reader.headers().map_err(err)?.clone();
    if header.get(0) != Some("user_id") {
        return Err(CliError::data(format!("{}: first column must be user_id", path.display())));
    }
    let metric_pos: Vec<usize> = (1..header.len()).filter(|&i| is_metric(&header[i])).collect();
    let columns = metric_pos.iter().map(|&i| header[i].to_string()).collect();
    let mut rows = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(err)?;
        let values = metric_pos
            .iter()
            .map(|&i| {
                record[i].parse::<f64>().map_err(|_| {
                    CliError::data(format!("{}: row {}: bad value `{}`", path.display(), line + 2, &record[i]))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if rows.insert(record[0].to_string(), values).is_some() {
            return Err(CliError::data(format!("{}: duplicate user `{}`", path.display(), &record[0])));
        }
    }
    Ok(UserTable { columns, rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `(A - B) / B * 100`; absent when B is zero.
    pub improvement_percent: Option<f64>,
    pub t: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub users: usize,
    pub rows: Vec<ComparisonRow>,
}

pub fn compare(a: &UserTable, b: &UserTable) -> CliResult<Comparison> {
    let users_a: BTreeSet<&String> = a.rows.keys().collect();
    let users_b: BTreeSet<&String> = b.rows.keys().collect();
    let mismatch = users_a.symmetric_difference(&users_b).count();
    if mismatch > 0 {
        return Err(CliError::config(format!(
            "reports cover different users: symmetric difference of {mismatch}"
        )));
    }
    if a.columns != b.columns {
        return Err(CliError::config("reports have different metric columns"));
    }
    let rows = a
        .columns
        .iter()
        .enumerate()
        .map(|(c, metric)| {
            let xs: Vec<f64> = a.rows.values().map(|r| r[c]).collect();
            let ys: Vec<f64> = b.rows.values().map(|r| r[c]).collect();
            let test = paired_t_test(&xs, &ys)?;
            let mean_a = xs.iter().sum::<f64>() / xs.len() as f64;
            let mean_b = ys.iter().sum::<f64>() / ys.len() as f64;
            Ok(ComparisonRow {
                metric: metric.clone(),
                mean_a,
                mean_b,
                improvement_percent: (mean_b != 0.0).then(|| (mean_a - mean_b) / mean_b * 100.0),
                t: test.t,
                p_value: test.p_value,
                significant: test.significant,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Comparison {
        users: a.rows.len(),
        rows,
    })
}

/// Fixed-width text table; `*` marks significance at the 95% level.
pub fn render(cmp: &Comparison) -> String {
    let mut out = format!(
        "{:<14} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
        "metric", "mean A", "mean B", "improv %", "t", "p"
    );
    for r in &cmp.rows {
        let improvement = r
            .improvement_percent
            .map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"));
        out.push_str(&format!(
            "{:<14} {:>10.4} {:>10.4} {:>10} {:>10.3} {:>10.4}{}\n",
            r.metric,
            r.mean_a,
            r.mean_b,
            improvement,
            r.t,
            r.p_value,
            if r.significant { " *" } else { "" }
        ));
    }
    out.push_str(&format!("{} paired users; * p < 0.05\n", cmp.users));
    out
}

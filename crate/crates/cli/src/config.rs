//! The run configuration: one JSON document, overridable from the command line.

use std::path::{Path, PathBuf};

use clap::Args;
use m2rec::dataset::{FilterSpec, SplitKind};
use m2rec::model::{Hyperparams, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Name of the effective configuration echoed into the output directory.
pub const EFFECTIVE_CONFIG_FILE: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Raw interaction log (CSV or TSV with a header row).
    pub interactions: Option<PathBuf>,
    /// Skip unparseable rows instead of aborting.
    pub lenient: bool,
    pub filter: FilterSpec,
    pub split: SplitKind,
    pub hyperparams: Hyperparams,
    pub grid: Option<Grid>,
    /// Retrain the selected configuration on train + validation before testing.
    pub retrain_on_validation: bool,
    pub ks: Vec<usize>,
    pub horizons: Vec<usize>,
    pub output_dir: PathBuf,
    /// Seeds training; overrides `hyperparams.seed`.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            interactions: None,
            lenient: false,
            filter: FilterSpec::default(),
            split: SplitKind::Order,
            hyperparams: Hyperparams::default(),
            grid: None,
            retrain_on_validation: true,
            ks: vec![5, 10, 20],
            horizons: vec![1, 2, 3],
            output_dir: PathBuf::from("m2rec-out"),
            seed: 0,
        }
    }
}

/// Axes of an exhaustive grid search. Absent axes keep the base hyperparameter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub d: Option<Vec<usize>>,
    pub gamma: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub learning_rate: Option<Vec<f64>>,
    pub variant: Option<Vec<Variant>>,
}

impl Grid {
    /// Every combination, in a fixed order (later axes vary fastest).
    pub fn combinations(&self, base: &Hyperparams) -> CliResult<Vec<Hyperparams>> {
        fn axis<T: Clone>(name: &str, values: &Option<Vec<T>>, base: T) -> CliResult<Vec<T>> {
            match values {
                None => Ok(vec![base]),
                Some(v) if v.is_empty() => Err(CliError::config(format!("grid axis `{name}` is empty"))),
                Some(v) => Ok(v.clone()),
            }
        }
        if self.d.is_none()
            && self.gamma.is_none()
            && self.lambda.is_none()
            && self.learning_rate.is_none()
            && self.variant.is_none()
        {
            return Err(CliError::config("grid declares no axes"));
        }
        let mut out = Vec::new();
        for variant in axis("variant", &self.variant, base.variant)? {
            for d in axis("d", &self.d, base.d)? {
                for gamma in axis("gamma", &self.gamma, base.gamma)? {
                    for lambda in axis("lambda", &self.lambda, base.lambda)? {
                        for learning_rate in axis("learning_rate", &self.learning_rate, base.learning_rate)? {
                            let hp = Hyperparams {
                                variant,
                                d,
                                gamma,
                                lambda,
                                learning_rate,
                                ..base.clone()
                            };
                            hp.validate()?;
                            out.push(hp);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Stable ledger key of one grid cell.
pub fn cell_key(hp: &Hyperparams) -> String {
    format!(
        "variant={},d={},gamma={},lambda={},learning_rate={}",
        hp.variant, hp.d, hp.gamma, hp.lambda, hp.learning_rate
    )
}

/// Command-line overrides shared by the pipeline commands.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub interactions: Option<PathBuf>,
    #[arg(long)]
    pub lenient: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Time-based split: last training timestamp.
    #[arg(long, requires = "valid_end")]
    pub train_end: Option<i64>,
    /// Time-based split: last validation timestamp.
    #[arg(long, requires = "train_end")]
    pub valid_end: Option<i64>,
    /// Use the order-based split (last basket tests, second-last validates).
    #[arg(long, conflicts_with = "train_end")]
    pub order_split: bool,
    #[arg(long)]
    pub min_items_per_user: Option<u64>,
    #[arg(long)]
    pub min_users_per_item: Option<u64>,
    #[arg(long)]
    pub min_baskets_per_user: Option<u64>,
    /// Count distinct items rather than interactions in the user filter.
    #[arg(long)]
    pub filter_distinct_items: bool,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Drop any grid from the configuration file.
    #[arg(long)]
    pub no_grid: bool,
    /// Comma-separated cut-offs, e.g. `5,10,20`.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Comma-separated horizons, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<usize>>,
}

impl ConfigArgs {
    /// Loads the configuration file (if any) and applies the flags on top.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = &self.interactions {
            cfg.interactions = Some(v.clone());
        }
        cfg.lenient |= self.lenient;
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let (Some(train_end), Some(valid_end)) = (self.train_end, self.valid_end) {
            cfg.split = SplitKind::Time { train_end, valid_end };
        }
        if self.order_split {
            cfg.split = SplitKind::Order;
        }
        if let Some(v) = self.min_items_per_user {
            cfg.filter.min_items_per_user = v;
        }
        if let Some(v) = self.min_users_per_item {
            cfg.filter.min_users_per_item = v;
        }
        if let Some(v) = self.min_baskets_per_user {
            cfg.filter.min_baskets_per_user = v;
        }
        cfg.filter.distinct_items |= self.filter_distinct_items;
        let hp = &mut cfg.hyperparams;
        if let Some(v) = self.variant {
            hp.variant = v;
        }
        if let Some(v) = self.d {
            hp.d = v;
        }
        if let Some(v) = self.gamma {
            hp.gamma = v;
        }
        if let Some(v) = self.lambda {
            hp.lambda = v;
        }
        if let Some(v) = self.learning_rate {
            hp.learning_rate = v;
        }
        if let Some(v) = self.epochs {
            hp.epochs = v;
        }
        if let Some(v) = self.batch_size {
            hp.batch_size = v;
        }
        if let Some(v) = self.patience {
            hp.early_stop_patience = v;
        }
        if self.no_grid {
            cfg.grid = None;
        }
        if let Some(v) = &self.ks {
            cfg.ks = v.clone();
        }
        if let Some(v) = &self.horizons {
            cfg.horizons = v.clone();
        }
        cfg.hyperparams.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.hyperparams.validate()?;
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(CliError::config("ks must be a non-empty list of positive cut-offs"));
        }
        if self.horizons.is_empty()
            || self
                .horizons
                .iter()
                .any(|&h| h == 0 || h > m2rec::evaluation::MAX_HORIZON)
        {
            return Err(CliError::config(format!(
                "horizons must lie within 1..={}",
                m2rec::evaluation::MAX_HORIZON
            )));
        }
        if let SplitKind::Time { train_end, valid_end } = self.split {
            if train_end >= valid_end {
                return Err(CliError::config(format!(
                    "train_end {train_end} must precede valid_end {valid_end}"
                )));
            }
        }
        Ok(())
    }

    pub fn interactions(&self) -> CliResult<&Path> {
        let path = self
            .interactions
            .as_deref()
            .ok_or_else(|| CliError::config("no interaction file configured"))?;
        if !path.exists() {
            return Err(CliError::config(format!(
                "interaction file {} does not exist",
                path.display()
            )));
        }
        Ok(path)
    }

    pub fn split_path(&self) -> PathBuf {
        self.output_dir.join("split.json")
    }

    pub fn model_path(&self) -> PathBuf {
        self.output_dir.join("model.json")
    }
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let cfg: RunConfig = serde_json::from_str(r#"{"ks": [10]}"#).unwrap();
        assert_eq!(cfg.ks, vec![10]);
        assert_eq!(cfg.horizons, vec![1, 2, 3]);
        assert_eq!(cfg.filter.min_baskets_per_user, 2);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"kz": [10]}"#).is_err());
    }

    #[test]
    fn grid_enumerates_cross_product() {
        let grid = Grid {
            d: Some(vec![8, 16]),
            gamma: Some(vec![0.2, 0.4, 0.6]),
            ..Grid::default()
        };
        let cells = grid.combinations(&Hyperparams::default()).unwrap();
        assert_eq!(cells.len(), 6);
        assert_eq!((cells[1].d, cells[1].gamma), (8, 0.4));
        let keys: std::collections::BTreeSet<_> = cells.iter().map(cell_key).collect();
        assert_eq!(keys.len(), 6);
    }

    #[test]
    fn empty_grid_is_a_configuration_error() {
        let none = Grid::default().combinations(&Hyperparams::default());
        assert!(matches!(none, Err(CliError::Config(_))));
        let empty = Grid {
            gamma: Some(vec![]),
            ..Grid::default()
        };
        let err = empty.combinations(&Hyperparams::default()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 3, "hyperparams": {"d": 8}}"#).unwrap();
        let args = ConfigArgs {
            config: Some(path),
            d: Some(32),
            ks: Some(vec![1, 2]),
            ..ConfigArgs::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.hyperparams.d, 32);
        assert_eq!(cfg.hyperparams.seed, 3);
        assert_eq!(cfg.ks, vec![1, 2]);
    }
}

//! Command-line pipeline around the `m2rec` library: prepare a corpus, train
//! with grid search, evaluate models and baselines over several horizons,
//! compare reports with paired t-tests, and run the item analyses.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 on data errors.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use m2rec::synthetic::{BasketSize, KernelSpec, MixtureWeights, SyntheticSpec};

use commands::evaluate::{Protocol, ScorerSource, Selector};
pub use config::{ConfigArgs, RunConfig};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "m2rec", version, about = "Next-basket recommendation with mixed models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ScorerArgs {
    /// What to score with.
    #[arg(long, value_enum)]
    pub scorer: Selector,
    /// Model file; defaults to the output directory's model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Synthetic ground-truth manifest, for the oracle.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

impl ScorerArgs {
    fn source(&self) -> ScorerSource {
        ScorerSource {
            model: self.model.clone(),
            manifest: self.manifest.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, filter and split a raw interaction log.
    Prepare(ConfigArgs),
    /// Train (with grid search when configured) and write the final model.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Keep grid cells already recorded in the ledger.
        #[arg(long)]
        resume: bool,
    },
    /// Score a model, baseline or ablation at each horizon.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[arg(long, value_enum, default_value = "test")]
        protocol: Protocol,
        /// Report name; defaults to the scorer's name.
        #[arg(long)]
        name: Option<String>,
    },
    /// Paired significance tests between two per-user report files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Also write the table as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a corpus from a planted mixture.
    GenerateSynthetic {
        /// JSON spec; flags below override it.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        baskets_per_user: Option<usize>,
        #[arg(long)]
        basket_size: Option<usize>,
        /// Markov, popularity and preference weights, e.g. `1,0,0`.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        /// Deterministic cyclic kernel with this shift.
        #[arg(long, conflicts_with = "random_kernel")]
        cyclic_shift: Option<usize>,
        /// Random kernel with this many successors per item.
        #[arg(long)]
        random_kernel: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Popularity-decile distribution of recommended items.
    AnalyzeDiversity {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[arg(long, default_value_t = 20)]
        k: usize,
    },
    /// Item transition counts and cluster similarity.
    AnalyzeTransitions {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated item ids.
        #[arg(long, value_delimiter = ',')]
        cluster: Vec<String>,
        #[arg(long, default_value_t = 1)]
        window: usize,
    },
    /// Write the encoder rows of a model as item embeddings.
    ExportEmbeddings {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs one command, printing its summary to stdout.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Prepare(args) => {
            let cfg = args.resolve()?;
            let report = commands::prepare::run(&cfg)?;
            for (name, s) in [
                ("filtered", &report.filtered),
                ("train", &report.train),
                ("validation", &report.validation),
                ("test", &report.test),
            ] {
                println!(
                    "{name:<10} users {:>7}  items {:>7}  baskets {:>8}  items/basket {:.2}  baskets/user {:.2}",
                    s.users, s.items, s.baskets, s.items_per_basket, s.baskets_per_user
                );
            }
            if !report.skipped_rows.is_empty() {
                println!("skipped {} malformed rows", report.skipped_rows.len());
            }
        }
        Command::Train { config, resume } => {
            let cfg = config.resolve()?;
            let summary = commands::train::run(&cfg, resume)?;
            println!(
                "selected {} (validation recall@5 {}), best epoch {}; trained {} cell(s); final model {} ({} epochs)",
                summary.selected,
                summary
                    .validation_recall_at_5
                    .map_or_else(|| "n/a".to_string(), |r| format!("{r:.4}")),
                summary.best_epoch,
                summary.cells_trained,
                if summary.final_model_reused { "reused" } else { "written" },
                summary.final_epochs,
            );
        }
        Command::Evaluate {
            config,
            scorer,
            protocol,
            name,
        } => {
            let cfg = config.resolve()?;
            let reports =
                commands::evaluate::run(&cfg, scorer.scorer, &scorer.source(), protocol, name.as_deref())?;
            for r in &reports {
                let means: Vec<String> = r
                    .means
                    .iter()
                    .map(|m| format!("R@{k} {:.4} P@{k} {:.4} N@{k} {:.4}", m.recall, m.precision, m.ndcg, k = m.k))
                    .collect();
                println!("{} horizon {} ({} users): {}", r.scorer, r.horizon, r.evaluated_users, means.join("  "));
                if let Some(note) = &r.note {
                    println!("  {note}");
                }
            }
        }
        Command::Compare { a, b, out } => {
            let ta = commands::compare::read_user_table(&a)?;
            let tb = commands::compare::read_user_table(&b)?;
            let cmp = commands::compare::compare(&ta, &tb)?;
            print!("{}", commands::compare::render(&cmp));
            if let Some(path) = out {
                commands::write_json(&path, &cmp)?;
            }
        }
        Command::GenerateSynthetic {
            spec,
            out,
            n,
            m,
            baskets_per_user,
            basket_size,
            weights,
            cyclic_shift,
            random_kernel,
            seed,
        } => {
            let mut s = match spec {
                Some(path) => commands::synthetic::load_spec(&path)?,
                None => SyntheticSpec::default(),
            };
            if let Some(v) = n {
                s.n = v;
            }
            if let Some(v) = m {
                s.m = v;
            }
            if let Some(v) = baskets_per_user {
                s.baskets_per_user = v;
            }
            if let Some(v) = basket_size {
                s.basket_size = BasketSize::Fixed { size: v };
            }
            if let Some(w) = weights {
                if w.len() != 3 {
                    return Err(CliError::config("--weights takes exactly three values"));
                }
                s.weights = MixtureWeights {
                    markov: w[0],
                    popularity: w[1],
                    preference: w[2],
                };
            }
            if let Some(shift) = cyclic_shift {
                s.kernel = KernelSpec::Cyclic { shift };
            }
            if let Some(out_degree) = random_kernel {
                s.kernel = KernelSpec::Random { out_degree };
            }
            if let Some(v) = seed {
                s.seed = v;
            }
            let (interactions, manifest) = commands::synthetic::run(&s, &out)?;
            println!("wrote {} and {}", interactions.display(), manifest.display());
        }
        Command::AnalyzeDiversity { config, scorer, k } => {
            let cfg = config.resolve()?;
            let out = commands::analyze::diversity(&cfg, scorer.scorer, &scorer.source(), k)?;
            let buckets: Vec<String> = out.report.buckets.iter().map(|b| format!("{b:.1}%")).collect();
            println!("{} top-{} over {} users: {}", out.scorer, out.k, out.users, buckets.join(" "));
        }
        Command::AnalyzeTransitions {
            config,
            cluster,
            window,
        } => {
            let cfg = config.resolve()?;
            let out = commands::analyze::transitions(&cfg, &cluster, window)?;
            println!("{} transitions; global mean cosine {:.6}", out.transitions, out.global_mean);
            if let Some(c) = out.cluster {
                println!(
                    "cluster of {}: mean cosine {:.6} ({:.2}x global)",
                    c.cluster_size, c.cluster_mean, c.ratio
                );
            }
        }
        Command::ExportEmbeddings { model, out } => {
            let rows = commands::analyze::embeddings(&model, &out)?;
            println!("wrote {rows} embeddings to {}", out.display());
        }
    }
    Ok(())
}

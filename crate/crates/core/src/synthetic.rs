//! Planted-structure corpora: each basket slot is drawn from a mixture of a
//! Markov item kernel, a global Zipf popularity law and a per-user catalog.
//!
//! The generator also returns its ground truth, from which [`BayesOracle`]
//! scores items by their exact next-basket probability.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::InteractionRecord;
use crate::error::{Error, Result};
use crate::ranking::{recommend_from_scores, Query, Recommendation, Recommender};

/// Tolerance on the sum of the mixture weights.
const WEIGHT_TOLERANCE: f64 = 1e-9;
/// Redraws allowed per slot before a basket is accepted short.
const MAX_REDRAWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasketSize {
    Fixed { size: usize },
    /// Inclusive range, drawn uniformly per basket.
    Uniform { min: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    pub markov: f64,
    pub popularity: f64,
    pub preference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// Item `i` always moves to `(i + shift) mod n`.
    Cyclic { shift: usize },
    /// Each item moves to one of `out_degree` random successors with random weights.
    Random { out_degree: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogSpec {
    /// Items are cut into consecutive blocks of `size`; user `u` owns block `u mod (n / size)`.
    Disjoint { size: usize },
    /// Each user owns `size` items drawn at random.
    Random { size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub baskets_per_user: usize,
    pub basket_size: BasketSize,
    pub weights: MixtureWeights,
    pub kernel: KernelSpec,
    pub zipf_exponent: f64,
    pub catalog: CatalogSpec,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n: 50,
            m: 500,
            baskets_per_user: 20,
            basket_size: BasketSize::Fixed { size: 1 },
            weights: MixtureWeights {
                markov: 1.0,
                popularity: 0.0,
                preference: 0.0,
            },
            kernel: KernelSpec::Cyclic { shift: 1 },
            zipf_exponent: 1.0,
            catalog: CatalogSpec::Disjoint { size: 5 },
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let w = self.weights;
        if [w.markov, w.popularity, w.preference]
            .iter()
            .any(|x| !x.is_finite() || *x < 0.0)
        {
            return Err(Error::config("mixture weights must be non-negative"));
        }
        let total = w.markov + w.popularity + w.preference;
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::config(format!(
                "mixture weights must sum to 1, got {total}"
            )));
        }
        if self.n == 0 || self.m == 0 || self.baskets_per_user == 0 {
            return Err(Error::config("n, m and baskets_per_user must be positive"));
        }
        let (lo, hi) = match self.basket_size {
            BasketSize::Fixed { size } => (size, size),
            BasketSize::Uniform { min, max } => (min, max),
        };
        if lo == 0 || lo > hi || hi > self.n {
            return Err(Error::config(format!(
                "basket size range {lo}..={hi} must lie within 1..={}",
                self.n
            )));
        }
        match self.kernel {
            KernelSpec::Cyclic { .. } => {}
            KernelSpec::Random { out_degree } => {
                if out_degree == 0 || out_degree > self.n {
                    return Err(Error::config("kernel out_degree must lie within 1..=n"));
                }
            }
        }
        let size = match self.catalog {
            CatalogSpec::Disjoint { size } | CatalogSpec::Random { size } => size,
        };
        if size == 0 || size > self.n {
            return Err(Error::config("catalog size must lie within 1..=n"));
        }
        if !self.zipf_exponent.is_finite() || self.zipf_exponent < 0.0 {
            return Err(Error::config("zipf_exponent must be non-negative"));
        }
        Ok(())
    }
}

/// Ground truth of a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: SyntheticSpec,
    /// External ids; position is the generator's item number.
    pub item_ids: Vec<String>,
    pub user_ids: Vec<String>,
    /// Row `i`: successors of item `i` with their probabilities.
    pub kernel: Vec<Vec<(u32, f64)>>,
    /// Zipf probability of each item (item 0 is the most popular).
    pub popularity: Vec<f64>,
    /// Catalog of each user; the user draws uniformly from it.
    pub catalogs: Vec<Vec<u32>>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub records: Vec<InteractionRecord>,
    pub manifest: Manifest,
}

pub fn item_id(i: usize) -> String {
    format!("i{i:05}")
}

pub fn user_id(u: usize) -> String {
    format!("u{u:06}")
}

fn build_kernel(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<(u32, f64)>> {
    let n = spec.n;
    (0..n)
        .map(|i| match spec.kernel {
            KernelSpec::Cyclic { shift } => vec![(((i + shift) % n) as u32, 1.0)],
            KernelSpec::Random { out_degree } => {
                let mut targets: Vec<u32> = sample(rng, n, out_degree)
                    .into_iter()
                    .map(|j| j as u32)
                    .collect();
                targets.sort_unstable();
                let raw: Vec<f64> = targets.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
                let total: f64 = raw.iter().sum();
                targets.into_iter().zip(raw.into_iter().map(|w| w / total)).collect()
            }
        })
        .collect()
}

fn build_catalogs(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<u32>> {
    (0..spec.m)
        .map(|u| match spec.catalog {
            CatalogSpec::Disjoint { size } => {
                let block = u % (spec.n / size);
                (block * size..(block + 1) * size).map(|i| i as u32).collect()
            }
            CatalogSpec::Random { size } => {
                let mut items: Vec<u32> = sample(rng, spec.n, size)
                    .into_iter()
                    .map(|i| i as u32)
                    .collect();
                items.sort_unstable();
                items
            }
        })
        .collect()
}

fn zipf(n: usize, exponent: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=n).map(|r| (r as f64).powf(-exponent)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Samples a corpus. Basket `t` (1-based) of every user carries timestamp `t`.
///
/// Each slot of a basket first picks a mixture component. The Markov component
/// follows the kernel from the slot-aligned item of the previous basket (from a
/// uniform item in the first basket); the others draw from the Zipf law or the
/// user's catalog. Items are distinct within a basket.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let kernel = build_kernel(spec, &mut rng);
    let catalogs = build_catalogs(spec, &mut rng);
    let popularity = zipf(spec.n, spec.zipf_exponent);

    let w = spec.weights;
    let component = WeightedIndex::new([w.markov, w.popularity, w.preference])
        .map_err(|e| Error::config(format!("mixture weights: {e}")))?;
    let zipf_draw = WeightedIndex::new(&popularity)
        .map_err(|e| Error::config(format!("popularity law: {e}")))?;
    let kernel_draws: Vec<WeightedIndex<f64>> = kernel
        .iter()
        .map(|row| WeightedIndex::new(row.iter().map(|&(_, p)| p)).expect("kernel row weights"))
        .collect();

    let item_ids: Vec<String> = (0..spec.n).map(item_id).collect();
    let user_ids: Vec<String> = (0..spec.m).map(user_id).collect();
    let mut records = Vec::new();
    for (u, catalog) in catalogs.iter().enumerate() {
        let mut previous: Vec<u32> = Vec::new();
        for t in 1..=spec.baskets_per_user {
            let size = match spec.basket_size {
                BasketSize::Fixed { size } => size,
                BasketSize::Uniform { min, max } => rng.gen_range(min..=max),
            };
            let mut basket: Vec<u32> = Vec::with_capacity(size);
            for slot in 0..size {
                for _ in 0..MAX_REDRAWS {
                    let item = match component.sample(&mut rng) {
                        0 if previous.is_empty() => rng.gen_range(0..spec.n) as u32,
                        0 => {
                            let source = previous[slot % previous.len()] as usize;
                            kernel[source][kernel_draws[source].sample(&mut rng)].0
                        }
                        1 => zipf_draw.sample(&mut rng) as u32,
                        _ => catalog[rng.gen_range(0..catalog.len())],
                    };
                    if !basket.contains(&item) {
                        basket.push(item);
                        break;
                    }
                }
            }
            for &item in &basket {
                records.push(InteractionRecord::new(
                    &user_ids[u],
                    &item_ids[item as usize],
                    t as i64,
                ));
            }
            previous = basket;
        }
    }

    Ok(SyntheticCorpus {
        records,
        manifest: Manifest {
            spec: spec.clone(),
            item_ids,
            user_ids,
            kernel,
            popularity,
            catalogs,
        },
    })
}

/// Writes the records as `user_id,item_id,timestamp,quantity`.
pub fn write_interactions(records: &[InteractionRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = csv::Writer::from_writer(std::io::BufWriter::new(file));
    out.write_record(["user_id", "item_id", "timestamp", "quantity"])?;
    for r in records {
        out.write_record([
            r.user_id.as_str(),
            r.item_id.as_str(),
            &r.timestamp.to_string(),
            &r.quantity.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, manifest)?;
    file.write_all(b"\n").map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_reader(std::io::BufReader::new(file))?;
    manifest.spec.validate()?;
    Ok(manifest)
}

/// Scores each item by its probability of appearing in a slot of the next
/// basket under the generating mixture.
#[derive(Debug, Clone)]
pub struct BayesOracle {
    manifest: Manifest,
    item_number: HashMap<String, u32>,
    user_number: HashMap<String, usize>,
}

impl BayesOracle {
    pub fn new(manifest: Manifest) -> Self {
        let item_number = manifest
            .item_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let user_number = manifest
            .user_ids
            .iter()
            .enumerate()
            .map(|(u, id)| (id.clone(), u))
            .collect();
        BayesOracle {
            manifest,
            item_number,
            user_number,
        }
    }

    /// Next-basket slot probabilities over the generator's item numbers.
    pub fn distribution(&self, user_id: &str, previous: &[u32]) -> Vec<f64> {
        let m = &self.manifest;
        let n = m.spec.n;
        let w = m.spec.weights;
        let mut probs: Vec<f64> = m.popularity.iter().map(|p| w.popularity * p).collect();
        if previous.is_empty() {
            probs.iter_mut().for_each(|p| *p += w.markov / n as f64);
        } else {
            let share = w.markov / previous.len() as f64;
            for &source in previous {
                for &(j, p) in &m.kernel[source as usize] {
                    probs[j as usize] += share * p;
                }
            }
        }
        if let Some(&u) = self.user_number.get(user_id) {
            let catalog = &m.catalogs[u];
            for &i in catalog {
                probs[i as usize] += w.preference / catalog.len() as f64;
            }
        }
        probs
    }
}

impl Recommender for BayesOracle {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn recommend(&self, query: &Query<'_>, k: usize) -> Recommendation {
        let vocabulary = query.vocabulary;
        let previous: Vec<u32> = query
            .history
            .last()
            .map(|basket| {
                basket
                    .unique_items()
                    .filter_map(|i| vocabulary.id_of(i))
                    .filter_map(|id| self.item_number.get(id).copied())
                    .collect()
            })
            .unwrap_or_default();
        let probs = self.distribution(query.user_id, &previous);
        let scores: Vec<f64> = vocabulary
            .trainable_ids()
            .iter()
            .map(|id| {
                self.item_number
                    .get(id)
                    .map_or(0.0, |&i| probs[i as usize])
            })
            .collect();
        recommend_from_scores(&scores, k, query.history.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::assemble_baskets;

    fn spec(weights: (f64, f64, f64)) -> SyntheticSpec {
        SyntheticSpec {
            n: 20,
            m: 30,
            baskets_per_user: 8,
            weights: MixtureWeights {
                markov: weights.0,
                popularity: weights.1,
                preference: weights.2,
            },
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn weights_must_sum_to_one() {
        let err = generate(&spec((0.5, 0.2, 0.2))).unwrap_err();
        assert!(err.is_config());
        assert!(generate(&spec((1.2, -0.2, 0.0))).unwrap_err().is_config());
    }

    #[test]
    fn cyclic_kernel_is_followed_exactly() {
        let mut s = spec((1.0, 0.0, 0.0));
        s.basket_size = BasketSize::Fixed { size: 3 };
        s.kernel = KernelSpec::Cyclic { shift: 1 };
        let corpus = assemble_baskets(&generate(&s).unwrap().records);
        for seq in &corpus.sequences {
            assert_eq!(seq.baskets.len(), 8);
            for pair in seq.baskets.windows(2) {
                let next: Vec<u32> = pair[0].unique_items().map(|i| (i + 1) % 20).collect();
                let mut next = next;
                next.sort_unstable();
                assert_eq!(pair[1].unique_items().collect::<Vec<_>>(), next);
            }
        }
    }

    #[test]
    fn zipf_frequencies_pass_chi_square() {
        let s = SyntheticSpec {
            n: 20,
            m: 1000,
            baskets_per_user: 100,
            weights: MixtureWeights {
                markov: 0.0,
                popularity: 1.0,
                preference: 0.0,
            },
            zipf_exponent: 1.1,
            seed: 5,
            ..SyntheticSpec::default()
        };
        let out = generate(&s).unwrap();
        assert_eq!(out.records.len(), 100_000);
        let mut counts = vec![0f64; 20];
        for r in &out.records {
            counts[r.item_id[1..].parse::<usize>().unwrap()] += 1.0;
        }
        let total = out.records.len() as f64;
        let chi2: f64 = counts
            .iter()
            .zip(&out.manifest.popularity)
            .map(|(o, p)| (o - total * p).powi(2) / (total * p))
            .sum();
        // 19 degrees of freedom: the 99.9th percentile is 43.82
        assert!(chi2 < 43.82, "chi2 = {chi2}");
    }

    #[test]
    fn same_seed_same_records() {
        let mut s = spec((0.3, 0.3, 0.4));
        s.kernel = KernelSpec::Random { out_degree: 3 };
        s.catalog = CatalogSpec::Random { size: 4 };
        s.basket_size = BasketSize::Uniform { min: 1, max: 4 };
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.manifest, b.manifest);
        for row in &a.manifest.kernel {
            assert!((row.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_catalogs_confine_users() {
        let s = SyntheticSpec {
            catalog: CatalogSpec::Disjoint { size: 5 },
            ..spec((0.0, 0.0, 1.0))
        };
        let out = generate(&s).unwrap();
        for r in &out.records {
            let u: usize = r.user_id[1..].parse().unwrap();
            let i: usize = r.item_id[1..].parse().unwrap();
            assert_eq!(i / 5, u % 4);
        }
    }

    #[test]
    fn oracle_distribution_sums_to_one() {
        let mut s = spec((0.5, 0.25, 0.25));
        s.kernel = KernelSpec::Random { out_degree: 4 };
        let out = generate(&s).unwrap();
        let oracle = BayesOracle::new(out.manifest);
        for previous in [vec![], vec![3], vec![1, 7, 19]] {
            let total: f64 = oracle.distribution(&user_id(2), &previous).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn manifest_round_trips() {
        let out = generate(&spec((1.0, 0.0, 0.0))).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        write_manifest(&out.manifest, &path).unwrap();
        assert_eq!(read_manifest(&path).unwrap(), out.manifest);
        write_interactions(&out.records, &dir.path().join("x.csv")).unwrap();
    }
}

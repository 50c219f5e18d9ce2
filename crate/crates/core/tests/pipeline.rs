//! End-to-end runs through the public API: ingest, filter, split, train,
//! persist and evaluate.

use m2rec::baselines::Poep;
use m2rec::dataset::{
    assemble_baskets, filter_corpus, parse_interactions, read_split, split_time, write_split,
    FilterSpec, ParseOptions,
};
use m2rec::evaluation::{evaluate_horizon, EvalOptions, EvalTarget};
use m2rec::model::{load_model, save_model, train, Hyperparams, Variant};
use m2rec::synthetic::{generate, write_interactions, MixtureWeights, SyntheticSpec};

const KS: [usize; 3] = [5, 10, 20];

fn synthetic_csv(dir: &std::path::Path) -> std::path::PathBuf {
    let spec = SyntheticSpec {
        n: 30,
        m: 60,
        baskets_per_user: 10,
        weights: MixtureWeights {
            markov: 0.4,
            popularity: 0.2,
            preference: 0.4,
        },
        basket_size: m2rec::synthetic::BasketSize::Uniform { min: 1, max: 3 },
        seed: 11,
        ..SyntheticSpec::default()
    };
    let path = dir.join("raw.csv");
    write_interactions(&generate(&spec).unwrap().records, &path).unwrap();
    path
}

#[test]
fn csv_to_report() {
    let dir = tempfile::tempdir().unwrap();
    let raw = std::fs::File::open(synthetic_csv(dir.path())).unwrap();
    let parsed = parse_interactions(raw, &ParseOptions::default()).unwrap();
    assert!(parsed.skipped.is_empty());

    let corpus = filter_corpus(&assemble_baskets(&parsed.records), &FilterSpec::new(5, 2, 2));
    let split = split_time(&corpus, 7, 8).unwrap();
    let split_path = dir.path().join("split.json");
    write_split(&split, &split_path).unwrap();
    let split = read_split(&split_path).unwrap();
    assert_eq!(split.train.m(), 60);

    let hp = Hyperparams {
        d: 8,
        epochs: 5,
        batch_size: 16,
        seed: 4,
        ..Hyperparams::default()
    };
    let outcome = train(&split, &hp).unwrap();
    assert_eq!(outcome.trained_users, 60);
    assert_eq!(outcome.log.len(), 5);
    assert!(outcome.log.iter().all(|r| r.validation_recall_at_5.is_some()));

    let model_path = dir.path().join("model.json");
    save_model(&outcome.model, &model_path).unwrap();
    let model = load_model(&model_path).unwrap();
    assert_eq!(model, outcome.model);
    assert!(model.matches(split.vocabulary()));

    let scorer = model.scorer(Variant::GP2T).unwrap();
    for horizon in 1..=2 {
        let report =
            evaluate_horizon(&scorer, &split, EvalTarget::Test, horizon, &KS, &EvalOptions::default())
                .unwrap();
        assert_eq!(report.evaluated_users, 60);
        assert_eq!(report.means.len(), 3);
        for m in &report.means {
            assert!((0.0..=1.0).contains(&m.recall));
        }
    }
    // the ablation runs on the trained parameters with alpha pinned
    let ugp = model.scorer(Variant::UgpOnly).unwrap();
    let a = evaluate_horizon(&ugp, &split, EvalTarget::Test, 1, &KS, &EvalOptions::default()).unwrap();
    let b = evaluate_horizon(&Poep, &split, EvalTarget::Test, 1, &KS, &EvalOptions::default()).unwrap();
    assert_eq!(a.means, b.means);
    assert!(model.scorer(Variant::P2).is_err());
}

#[test]
fn training_is_bit_reproducible_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let raw = std::fs::File::open(synthetic_csv(dir.path())).unwrap();
    let parsed = parse_interactions(raw, &ParseOptions::default()).unwrap();
    let split = split_time(&assemble_baskets(&parsed.records), 7, 8).unwrap();
    let hp = Hyperparams {
        d: 6,
        epochs: 3,
        variant: Variant::GP2,
        seed: 8,
        ..Hyperparams::default()
    };
    let mut bytes = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("model{run}.json"));
        save_model(&train(&split, &hp).unwrap().model, &path).unwrap();
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

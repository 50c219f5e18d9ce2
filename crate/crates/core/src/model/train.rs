use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    adagrad_step, backward_into, forward, loss, AdagradState, Hyperparams, M2Model, M2Params,
    M2Scorer, UserContext,
};
use crate::dataset::{ItemIndex, SplitCorpus};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_horizon, EvalOptions, EvalTarget};

/// Validation cut-off used for model selection.
const SELECTION_K: usize = 5;

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Summed data loss over the epoch's users plus the L2 term at epoch end.
    pub train_loss: f64,
    pub validation_recall_at_5: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch (or the last epoch without validation).
    pub model: M2Model,
    pub log: Vec<EpochRecord>,
    /// Seconds spent per epoch, kept apart from the deterministic log.
    pub epoch_seconds: Vec<f64>,
    /// 0 when no epoch ran.
    pub best_epoch: usize,
    pub best_validation_recall: Option<f64>,
    pub trained_users: usize,
    /// Training users with fewer than two baskets.
    pub skipped_users: usize,
}

struct Example {
    context: UserContext,
    target: Vec<ItemIndex>,
}

/// Fits the model on each training user's last training basket, using the
/// baskets before it as context.
///
/// Users are visited in a seed-shuffled order each epoch; gradients are summed
/// over a mini-batch, the L2 gradient is added once, and one Adagrad step is
/// taken. When the split has validation users, recall@5 on their first
/// validation basket picks the returned epoch and drives early stopping.
pub fn train(split: &SplitCorpus, hp: &Hyperparams) -> Result<TrainOutcome> {
    hp.validate()?;
    let vocabulary = split.vocabulary().clone();
    let n = vocabulary.n();

    let mut skipped_users = 0;
    let mut examples = Vec::new();
    for seq in &split.train.sequences {
        if seq.baskets.len() < 2 {
            skipped_users += 1;
            continue;
        }
        let (last, context) = seq.baskets.split_last().unwrap();
        let history: Vec<_> = context.iter().collect();
        let target: Vec<ItemIndex> = last.unique_items().filter(|&i| (i as usize) < n).collect();
        if target.is_empty() {
            skipped_users += 1;
            continue;
        }
        examples.push(Example {
            context: UserContext::from_history(&history, hp.gamma, n),
            target,
        });
    }
    if examples.is_empty() {
        return Err(Error::Training(
            "no training user has two or more training baskets".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let layout = hp.variant.layout();
    let mut params = M2Params::init(layout, n, hp.d, &mut rng);
    let mut state = AdagradState::new(&params);
    let mut grads = params.zeros_like();

    let validate = split.validation.m() > 0;
    let mut best: Option<(f64, usize, M2Params)> = None;
    let mut since_best = 0;
    let mut log = Vec::new();
    let mut epoch_seconds = Vec::new();
    let mut order: Vec<usize> = (0..examples.len()).collect();

    for epoch in 1..=hp.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut data_loss = 0.0;
        for batch in order.chunks(hp.batch_size) {
            grads.fill_zero();
            for &idx in batch {
                let ex = &examples[idx];
                let trace = forward(&params, hp.variant, &ex.context);
                data_loss += loss(&trace.r_hat, &ex.target, 0.0, &params);
                backward_into(&params, &trace, &ex.target, &mut grads);
            }
            params.add_l2_gradient(hp.lambda, &mut grads);
            adagrad_step(&mut params, &grads, &mut state, hp.learning_rate);
        }
        if !params.all_finite() {
            return Err(Error::Training(format!("parameters diverged in epoch {epoch}")));
        }

        let recall = if validate {
            let scorer = M2Scorer::new(params.clone(), hp.variant, hp.gamma);
            let report = evaluate_horizon(
                &scorer,
                split,
                EvalTarget::Validation,
                1,
                &[SELECTION_K],
                &EvalOptions::default(),
            )?;
            Some(report.means[0].recall)
        } else {
            None
        };
        log.push(EpochRecord {
            epoch,
            train_loss: data_loss + hp.lambda * params.squared_norm(),
            validation_recall_at_5: recall,
        });
        epoch_seconds.push(started.elapsed().as_secs_f64());

        if let Some(r) = recall {
            if best.as_ref().is_none_or(|(b, _, _)| r > *b) {
                best = Some((r, epoch, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if hp.early_stop_patience > 0 && since_best >= hp.early_stop_patience {
                    break;
                }
            }
        }
    }

    let (best_validation_recall, best_epoch, params) = match best {
        Some((r, e, p)) => (Some(r), e, p),
        None => (None, log.len(), params),
    };
    Ok(TrainOutcome {
        model: M2Model {
            params,
            hyperparams: hp.clone(),
            item_ids: vocabulary.trainable_ids().to_vec(),
        },
        log,
        epoch_seconds,
        best_epoch,
        best_validation_recall,
        trained_users: examples.len(),
        skipped_users,
    })
}

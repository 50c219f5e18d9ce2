//! Analytic gradients against central finite differences.

use m2rec::dataset::{Basket, ItemIndex};
use m2rec::model::{backward, forward, loss, Block, M2Params, UserContext, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 12;
const D: usize = 4;
const STEP: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;
const FLOOR: f64 = 1e-8;
const LAMBDA: f64 = 1e-3;

struct Instance {
    params: M2Params,
    context: UserContext,
    target: Vec<ItemIndex>,
}

fn random_instance(variant: Variant, rng: &mut ChaCha8Rng) -> Instance {
    let mut params = M2Params::zeros(variant.layout(), N, D);
    for block in variant.layout().blocks() {
        for x in params.block_mut(block) {
            *x = rng.gen_range(-0.8..0.8);
        }
    }
    let baskets: Vec<Basket> = (0..rng.gen_range(1..5))
        .map(|t| {
            let entries: Vec<(ItemIndex, u32)> = (0..rng.gen_range(1..5))
                .map(|_| (rng.gen_range(0..N as ItemIndex), rng.gen_range(1..3)))
                .collect();
            Basket::new(t, entries)
        })
        .collect();
    let history: Vec<&Basket> = baskets.iter().collect();
    let gamma = rng.gen_range(0.2..1.0);
    let target = (0..rng.gen_range(1..4))
        .map(|_| rng.gen_range(0..N as ItemIndex))
        .collect();
    Instance {
        params,
        context: UserContext::from_history(&history, gamma, N),
        target,
    }
}

fn objective(params: &M2Params, variant: Variant, inst: &Instance) -> f64 {
    let trace = forward(params, variant, &inst.context);
    loss(&trace.r_hat, &inst.target, LAMBDA, params)
}

/// Largest relative error over every parameter entry of every instance.
fn worst_error(variant: Variant, instances: usize, seed: u64) -> (f64, Block) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0, Block::W);
    for _ in 0..instances {
        let inst = random_instance(variant, &mut rng);
        let trace = forward(&inst.params, variant, &inst.context);
        let grads = backward(&inst.params, &trace, &inst.target, LAMBDA);
        for block in variant.layout().blocks() {
            for idx in 0..inst.params.block(block).len() {
                let mut plus = inst.params.clone();
                plus.block_mut(block)[idx] += STEP;
                let mut minus = inst.params.clone();
                minus.block_mut(block)[idx] -= STEP;
                let numeric =
                    (objective(&plus, variant, &inst) - objective(&minus, variant, &inst)) / (2.0 * STEP);
                let analytic = grads.block(block)[idx];
                let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR);
                if err > worst.0 {
                    worst = (err, block);
                }
            }
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    for (seed, variant) in [Variant::P2, Variant::GP2, Variant::GP2T].into_iter().enumerate() {
        let (err, block) = worst_error(variant, 20, seed as u64);
        assert!(err < TOLERANCE, "{variant}: relative error {err:e} in block {}", block.name());
    }
}

#[test]
fn ablation_gradients_match_finite_differences() {
    for variant in [Variant::UgpOnly, Variant::TpiOnly] {
        let (err, block) = worst_error(variant, 10, 77);
        assert!(err < TOLERANCE, "{variant}: relative error {err:e} in block {}", block.name());
    }
}

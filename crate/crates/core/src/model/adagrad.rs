use super::M2Params;

pub const ADAGRAD_EPSILON: f64 = 1e-10;

/// Per-entry running sums of squared gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct AdagradState {
    pub accumulators: M2Params,
    pub epsilon: f64,
}

impl AdagradState {
    pub fn new(params: &M2Params) -> Self {
        AdagradState {
            accumulators: params.zeros_like(),
            epsilon: ADAGRAD_EPSILON,
        }
    }
}

/// `acc += g^2; theta -= lr * g / (sqrt(acc) + eps)`, entrywise.
pub fn adagrad_step(params: &mut M2Params, grads: &M2Params, state: &mut AdagradState, learning_rate: f64) {
    assert_eq!(params.layout, grads.layout, "gradient layout mismatch");
    let eps = state.epsilon;
    for ((theta, acc), g) in params
        .blocks_mut()
        .zip(state.accumulators.blocks_mut())
        .zip(grads.raw_blocks())
    {
        assert_eq!(theta.len(), g.len(), "gradient shape mismatch");
        for ((t, a), &gi) in theta.iter_mut().zip(acc.iter_mut()).zip(g) {
            if gi == 0.0 {
                continue;
            }
            *a += gi * gi;
            *t -= learning_rate * gi / (a.sqrt() + eps);
        }
    }
}

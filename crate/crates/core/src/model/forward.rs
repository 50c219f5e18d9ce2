use super::{Block, M2Params, SparseVector, UserContext, Variant};
use crate::dataset::ItemIndex;

/// Scores below this are clamped before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-12;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= total);
    out
}

/// `h = tanh(g W)` with `W` stored row-major as `n x d`.
pub fn encode(g: &SparseVector, w: &[f64], d: usize) -> Vec<f64> {
    assert_eq!(w.len(), g.n * d, "encoder shape mismatch: g has {} items, W has {} entries for d={d}", g.n, w.len());
    let mut pre = vec![0.0; d];
    for &(j, gj) in &g.entries {
        let row = &w[j as usize * d..(j as usize + 1) * d];
        for (acc, &wjk) in pre.iter_mut().zip(row) {
            *acc += gj * wjk;
        }
    }
    pre.iter().map(|x| x.tanh()).collect()
}

/// Decoder logits `h A + b` with `A` stored row-major as `d x n`.
pub fn decoder_logits(h: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    assert_eq!(a.len(), h.len() * n, "decoder shape mismatch");
    let mut logits = b.to_vec();
    for (k, &hk) in h.iter().enumerate() {
        if hk == 0.0 {
            continue;
        }
        let row = &a[k * n..(k + 1) * n];
        for (l, &akj) in logits.iter_mut().zip(row) {
            *l += hk * akj;
        }
    }
    logits
}

/// `s = softmax(h A + b)`.
pub fn decode(h: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    softmax(&decoder_logits(h, a, b))
}

/// Mixing weight of the non-preference score vector.
///
/// `P2` uses the shared logit `a`; `GP2` and `GP2T` use `p.c + x.q` where `x` is
/// `v` or `h` respectively. The ablations return their fixed endpoints.
pub fn gate(variant: Variant, p: &SparseVector, v_or_h: &[f64], c: &[f64], q: &[f64], a: f64) -> f64 {
    match variant {
        Variant::P2 => sigmoid(a),
        Variant::GP2 | Variant::GP2T => {
            let lin: f64 = p.dot(c) + v_or_h.iter().zip(q).map(|(x, y)| x * y).sum::<f64>();
            sigmoid(lin)
        }
        Variant::UgpOnly => 0.0,
        Variant::TpiOnly => 1.0,
    }
}

/// `(1 - alpha) p + alpha z`.
pub fn score(p: &SparseVector, z: &[f64], alpha: f64) -> Vec<f64> {
    let mut r: Vec<f64> = z.iter().map(|&x| alpha * x).collect();
    if alpha != 1.0 {
        for &(j, pj) in &p.entries {
            r[j as usize] += (1.0 - alpha) * pj;
        }
    }
    r
}

/// Intermediates of one user's forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace<'a> {
    pub variant: Variant,
    pub context: &'a UserContext,
    /// Encoder output; empty for variants without transitions.
    pub h: Vec<f64>,
    /// The normalized non-preference scores: `softmax(v)` or the decoder output.
    /// Empty for `UGP_ONLY`.
    pub s: Vec<f64>,
    pub alpha: f64,
    /// False when `alpha` is pinned, either by the variant or by an empty context.
    pub gate_active: bool,
    pub r_hat: Vec<f64>,
}

impl ForwardTrace<'_> {
    pub fn p(&self) -> &SparseVector {
        &self.context.p
    }

    pub fn g(&self) -> &SparseVector {
        &self.context.g
    }
}

/// Runs `variant` on one user. A user without history is scored with
/// `alpha = 1` (all-zero scores for `UGP_ONLY`).
pub fn forward<'a>(params: &M2Params, variant: Variant, context: &'a UserContext) -> ForwardTrace<'a> {
    assert_eq!(
        variant.layout(),
        params.layout,
        "variant {variant} cannot run on {:?} parameters",
        params.layout
    );
    assert_eq!(context.n(), params.n, "context length differs from model item count");
    let n = params.n;

    if variant == Variant::UgpOnly {
        return ForwardTrace {
            variant,
            context,
            h: Vec::new(),
            s: Vec::new(),
            alpha: 0.0,
            gate_active: false,
            r_hat: if context.has_history {
                context.p.to_dense()
            } else {
                vec![0.0; n]
            },
        };
    }

    let (h, s) = if variant.uses_transitions() {
        let h = encode(&context.g, params.block(Block::W), params.d);
        let s = decode(&h, params.block(Block::A), params.block(Block::B));
        (h, s)
    } else {
        (Vec::new(), softmax(params.block(Block::V)))
    };

    let gate_active = context.has_history && variant != Variant::TpiOnly;
    let alpha = if gate_active {
        let feature = if variant == Variant::GP2T { &h[..] } else { params.block(Block::V) };
        let a = params.block(Block::GateLogit).first().copied().unwrap_or(0.0);
        gate(variant, &context.p, feature, params.block(Block::C), params.block(Block::Q), a)
    } else {
        1.0
    };
    let r_hat = score(&context.p, &s, alpha);
    ForwardTrace {
        variant,
        context,
        h,
        s,
        alpha,
        gate_active,
        r_hat,
    }
}

/// Unique in-vocabulary items of a target basket, ascending.
pub(crate) fn unique_targets(target: &[ItemIndex], n: usize) -> Vec<ItemIndex> {
    let mut t: Vec<ItemIndex> = target.iter().copied().filter(|&i| (i as usize) < n).collect();
    t.sort_unstable();
    t.dedup();
    t
}

/// Negative log-likelihood of the target items plus `lambda * ||theta||^2`.
/// Repeated target items count once.
pub fn loss(r_hat: &[f64], target: &[ItemIndex], lambda: f64, params: &M2Params) -> f64 {
    let data: f64 = unique_targets(target, r_hat.len())
        .into_iter()
        .map(|j| -r_hat[j as usize].max(LOG_FLOOR).ln())
        .sum();
    data + lambda * params.squared_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Layout;

    fn sparse(dense: &[f64]) -> SparseVector {
        SparseVector {
            n: dense.len(),
            entries: dense
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0.0)
                .map(|(i, &x)| (i as ItemIndex, x))
                .collect(),
        }
    }

    #[test]
    fn encode_zero_weights() {
        let h = encode(&sparse(&[1.0, 2.0, 0.0]), &[0.0; 6], 2);
        assert_eq!(h, vec![0.0, 0.0]);
    }

    #[test]
    fn encode_hand_value() {
        // tanh(0.5) = 0.46211715726000974 (independently evaluated)
        let h = encode(&sparse(&[1.0, 0.0]), &[0.5, 0.0, 0.0, 0.5], 2);
        assert!((h[0] - 0.462_117_157_260_009_7).abs() < 1e-15);
        assert_eq!(h[1], 0.0);
    }

    #[test]
    fn encode_saturates_without_overflow() {
        let h = encode(&sparse(&[1e6, 3e6]), &[0.7, -0.2, 0.1, 0.9], 2);
        assert!(h.iter().all(|x| x.is_finite() && x.abs() <= 1.0));
    }

    #[test]
    #[should_panic(expected = "encoder shape mismatch")]
    fn encode_rejects_bad_shape() {
        encode(&sparse(&[1.0, 0.0]), &[0.0; 3], 2);
    }

    #[test]
    fn decode_uniform_at_zero() {
        let s = decode(&[0.0, 0.0], &[0.0; 8], &[0.0; 4]);
        assert!(s.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn decode_with_log_two_bias() {
        let s = decode(&[0.0], &[0.0; 3], &[std::f64::consts::LN_2, 0.0, 0.0]);
        for (got, want) in s.iter().zip([0.5, 0.25, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_shift_invariant() {
        let logits = [0.3, -1.2, 2.5, 0.0];
        let shifted: Vec<f64> = logits.iter().map(|x| x + 17.0).collect();
        for (a, b) in softmax(&logits).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn gate_values() {
        let p = sparse(&[0.5, 0.5]);
        assert_eq!(gate(Variant::GP2, &p, &[1.0, 2.0], &[0.0; 2], &[0.0; 2], 0.0), 0.5);
        assert_eq!(gate(Variant::GP2T, &p, &[0.3], &[0.0; 2], &[0.0], 0.0), 0.5);
        assert_eq!(gate(Variant::P2, &p, &[], &[], &[], 0.0), 0.5);
        // p.c + h.q = ln 3 -> 3/4
        let alpha = gate(Variant::GP2T, &p, &[1.0], &[3f64.ln(), 3f64.ln()], &[0.0], 0.0);
        assert!((alpha - 0.75).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_is_stable_in_both_tails() {
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn score_endpoints_and_blend() {
        let p = sparse(&[1.0, 0.0]);
        let s = [0.5, 0.5];
        assert_eq!(score(&p, &s, 0.0), vec![1.0, 0.0]);
        assert_eq!(score(&p, &s, 1.0), vec![0.5, 0.5]);
        assert_eq!(score(&p, &s, 0.5), vec![0.75, 0.25]);
    }

    #[test]
    fn loss_values() {
        let params = M2Params::zeros(Layout::P2, 4, 1);
        assert_eq!(loss(&[0.0, 1.0, 0.0, 0.0], &[1], 0.0, &params), 0.0);
        let l = loss(&[0.25; 4], &[0, 2, 2], 0.0, &params);
        assert!((l - 2.0 * 4f64.ln()).abs() < 1e-12);
        assert!((l - 2.772_588_722_239_781).abs() < 1e-12);

        let mut scalar = M2Params::zeros(Layout::P2, 0, 1);
        scalar.block_mut(Block::GateLogit)[0] = 2.0;
        assert!((loss(&[], &[], 0.1, &scalar) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn loss_is_finite_on_zero_scores() {
        let params = M2Params::zeros(Layout::P2, 2, 1);
        let l = loss(&[0.0, 1.0], &[0], 0.0, &params);
        assert!((l - (-LOG_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn empty_context_pins_alpha_to_one() {
        let mut params = M2Params::zeros(Layout::GP2, 3, 1);
        params.block_mut(Block::V)[2] = 1.0;
        let ctx = UserContext::from_history(&[], 1.0, 3);
        let trace = forward(&params, Variant::GP2, &ctx);
        assert_eq!(trace.alpha, 1.0);
        assert!(!trace.gate_active);
        assert_eq!(trace.r_hat, softmax(params.block(Block::V)));
    }
}

use super::forward::unique_targets;
use super::{Block, ForwardTrace, M2Params, Variant, LOG_FLOOR};
use crate::dataset::ItemIndex;

/// Gradient of the loss (data term plus `lambda * ||theta||^2`) for one user.
pub fn backward(params: &M2Params, trace: &ForwardTrace<'_>, target: &[ItemIndex], lambda: f64) -> M2Params {
    let mut grads = params.zeros_like();
    backward_into(params, trace, target, &mut grads);
    params.add_l2_gradient(lambda, &mut grads);
    grads
}

/// Adds the data-term gradient of one user to `grads`.
///
/// With `r = (1 - alpha) p + alpha z`, the loss `-sum_j log r_j` over target
/// items gives `dL/dr_j = -1/r_j`. From there the chain runs through the blend
/// into `alpha` (and the gate's inputs) and into `z` (through the softmax into
/// `v`, or into `b`, `A`, `h` and finally `W`).
pub fn backward_into(params: &M2Params, trace: &ForwardTrace<'_>, target: &[ItemIndex], grads: &mut M2Params) {
    let variant = trace.variant;
    if variant == Variant::UgpOnly {
        return;
    }
    let n = params.n;
    let targets = unique_targets(target, n);
    let p = trace.p();
    let z = &trace.s;
    let alpha = trace.alpha;

    // dL/dr_j is non-zero only on targets; clamped scores pass no gradient
    let mut d_alpha = 0.0;
    let mut dz_targets: Vec<(usize, f64)> = Vec::with_capacity(targets.len());
    for j in targets {
        let j = j as usize;
        let r = trace.r_hat[j];
        if r < LOG_FLOOR {
            continue;
        }
        let dr = -1.0 / r;
        d_alpha += dr * (z[j] - p.get(j as ItemIndex));
        dz_targets.push((j, alpha * dr));
    }

    // softmax backward: dlogit_k = z_k (dz_k - sum_j z_j dz_j)
    let weighted: f64 = dz_targets.iter().map(|&(j, dz)| z[j] * dz).sum();
    let mut d_logits: Vec<f64> = z.iter().map(|&zk| -zk * weighted).collect();
    for &(j, dz) in &dz_targets {
        d_logits[j] += z[j] * dz;
    }

    let d_gate = if trace.gate_active {
        d_alpha * alpha * (1.0 - alpha)
    } else {
        0.0
    };

    match variant {
        Variant::P2 => {
            add(grads.block_mut(Block::V), &d_logits);
            grads.block_mut(Block::GateLogit)[0] += d_gate;
        }
        Variant::GP2 => {
            add(grads.block_mut(Block::V), &d_logits);
            if d_gate != 0.0 {
                add_sparse(grads.block_mut(Block::C), p.entries.iter(), d_gate);
                let v = params.block(Block::V);
                let q = params.block(Block::Q);
                for (gq, &vj) in grads.block_mut(Block::Q).iter_mut().zip(v) {
                    *gq += d_gate * vj;
                }
                for (gv, &qj) in grads.block_mut(Block::V).iter_mut().zip(q) {
                    *gv += d_gate * qj;
                }
            }
        }
        Variant::GP2T | Variant::TpiOnly => {
            let d = params.d;
            let h = &trace.h;
            add(grads.block_mut(Block::B), &d_logits);

            // dA[k, j] = h_k dlogit_j ; dh_k = sum_j A[k, j] dlogit_j
            let a = params.block(Block::A);
            let mut d_h = vec![0.0; d];
            {
                let ga = grads.block_mut(Block::A);
                for k in 0..d {
                    let a_row = &a[k * n..(k + 1) * n];
                    let ga_row = &mut ga[k * n..(k + 1) * n];
                    let hk = h[k];
                    let mut acc = 0.0;
                    for ((g, &akj), &dl) in ga_row.iter_mut().zip(a_row).zip(&d_logits) {
                        *g += hk * dl;
                        acc += akj * dl;
                    }
                    d_h[k] = acc;
                }
            }

            if d_gate != 0.0 {
                add_sparse(grads.block_mut(Block::C), p.entries.iter(), d_gate);
                let q = params.block(Block::Q);
                for ((gq, &hk), (dh, &qk)) in grads
                    .block_mut(Block::Q)
                    .iter_mut()
                    .zip(h)
                    .zip(d_h.iter_mut().zip(q))
                {
                    *gq += d_gate * hk;
                    *dh += d_gate * qk;
                }
            }

            // through tanh, then dW[j, k] = g_j dpre_k for the items in g
            let d_pre: Vec<f64> = d_h.iter().zip(h).map(|(dh, hk)| dh * (1.0 - hk * hk)).collect();
            let gw = grads.block_mut(Block::W);
            for &(j, gj) in &trace.g().entries {
                let row = &mut gw[j as usize * d..(j as usize + 1) * d];
                for (w, &dp) in row.iter_mut().zip(&d_pre) {
                    *w += gj * dp;
                }
            }
        }
        Variant::UgpOnly => unreachable!(),
    }
}

fn add(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn add_sparse<'a>(dst: &mut [f64], src: impl Iterator<Item = &'a (ItemIndex, f64)>, scale: f64) {
    for &(j, x) in src {
        dst[j as usize] += scale * x;
    }
}

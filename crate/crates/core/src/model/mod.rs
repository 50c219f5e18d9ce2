//! The mixed-model family.
//!
//! Every variant scores items as a convex blend `(1 - alpha) * p + alpha * z`
//! of the user's own item frequencies `p` and a normalized score vector `z`:
//!
//! | variant    | `z`                         | `alpha`                   |
//! |------------|-----------------------------|---------------------------|
//! | `P2`       | `softmax(v)`                | `sigmoid(a)`, shared      |
//! | `GP2`      | `softmax(v)`                | `sigmoid(p.c + v.q)`      |
//! | `GP2T`     | `softmax(tanh(g W) A + b)`  | `sigmoid(p.c + h.q)`      |
//! | `UGP_ONLY` | unused                      | fixed at 0                |
//! | `TPI_ONLY` | as `GP2T`                   | fixed at 1                |
//!
//! `g` is the user's time-decayed item history and `h = tanh(g W)` its encoding.
//! The two ablations share the `GP2T` parameter layout so a trained model can be
//! evaluated with either half switched off.

mod adagrad;
mod backward;
mod context;
mod forward;
mod params;
mod persist;
mod predict;
mod train;

use serde::{Deserialize, Serialize};

pub use adagrad::{adagrad_step, AdagradState, ADAGRAD_EPSILON};
pub use backward::{backward, backward_into};
pub use context::{
    compute_decayed_history, compute_preference, HistoryVector, PreferenceVector, SparseVector,
    UserContext,
};
pub use forward::{decode, encode, forward, gate, loss, score, sigmoid, softmax, ForwardTrace, LOG_FLOOR};
pub use params::{Block, Layout, M2Params};
pub use persist::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use predict::{predict_topk, M2Model, M2Scorer};
pub use train::{train, EpochRecord, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    P2,
    GP2,
    GP2T,
    #[serde(rename = "UGP_ONLY")]
    UgpOnly,
    #[serde(rename = "TPI_ONLY")]
    TpiOnly,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::P2,
        Variant::GP2,
        Variant::GP2T,
        Variant::UgpOnly,
        Variant::TpiOnly,
    ];

    pub fn layout(self) -> Layout {
        match self {
            Variant::P2 => Layout::P2,
            Variant::GP2 => Layout::GP2,
            Variant::GP2T | Variant::UgpOnly | Variant::TpiOnly => Layout::Transition,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::P2 => "P2",
            Variant::GP2 => "GP2",
            Variant::GP2T => "GP2T",
            Variant::UgpOnly => "UGP_ONLY",
            Variant::TpiOnly => "TPI_ONLY",
        }
    }

    /// Whether the variant's decoder path uses the transition encoder.
    pub fn uses_transitions(self) -> bool {
        matches!(self, Variant::GP2T | Variant::TpiOnly)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == norm)
            .ok_or_else(|| crate::Error::config(format!("unknown variant `{s}`")))
    }
}

/// Training and model hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Hidden dimension of the transition encoder.
    pub d: usize,
    /// Time decay applied to older baskets, in (0, 1].
    pub gamma: f64,
    /// L2 weight.
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Users per gradient step.
    pub batch_size: usize,
    pub seed: u64,
    pub variant: Variant,
    /// Epochs without validation improvement before stopping; 0 disables early stopping.
    pub early_stop_patience: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            d: 16,
            gamma: 0.6,
            lambda: 1e-4,
            learning_rate: 1e-2,
            epochs: 100,
            batch_size: 256,
            seed: 0,
            variant: Variant::GP2T,
            early_stop_patience: 10,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |msg: String| Err(crate::Error::Config(msg));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        Ok(())
    }
}

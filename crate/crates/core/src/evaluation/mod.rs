//! Ranking metrics, the multi-horizon protocol, significance testing and the
//! diversity and transition analyses.

mod diversity;
mod embeddings;
mod metrics;
mod protocol;
mod significance;
mod transitions;

pub use diversity::{diversity_report, frequency_deciles, DiversityReport, BUCKETS};
pub use embeddings::{export_embeddings, read_embeddings};
pub use metrics::{ndcg_at_k, precision_at_k, recall_at_k};
pub use protocol::{
    evaluate_horizon, history_for, EvalOptions, EvalReport, EvalTarget, MetricMeans, UserMetrics,
    MAX_HORIZON,
};
pub use significance::{paired_t_test, PairedTTest, SIGNIFICANCE_LEVEL};
pub use transitions::{
    global_mean_cosine, similarity_report, transition_matrix, SimilarityReport, TransitionMatrix,
};

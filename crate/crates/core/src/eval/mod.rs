//! Link-prediction and classification harnesses.

mod classify;
mod linkpred;
mod logreg;
mod metrics;

pub use classify::{classify_harness, read_labels, ClassifyReport};
pub use linkpred::{
    evaluate_with_scorer, linkpred_harness, pair_features, read_instances, sample_candidates, write_instances,
    FeatureBlock, FeatureSpec, LinkPredInstance, LinkPredMetrics, Split, DEFAULT_KS,
};
pub use logreg::{train_logreg, LogRegConfig, LogisticModel, OneVsRest};
pub use metrics::{accuracy, precision_at_k, recall_at_k, RankedResult};

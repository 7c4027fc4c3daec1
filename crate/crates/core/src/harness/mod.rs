//! Training, reranking, evaluation and experiment drivers.

mod config;
mod dataset;
mod experiment;
mod metrics;
mod rerank;
mod sampling;
mod split;
mod sweep;
mod toy;
mod train;
mod trec;

pub use config::{ExperimentConfig, TrainConfig};
pub use dataset::{Dataset, EmbeddingSource, GraphCache};
pub use experiment::{run_experiment, ExperimentResult};
pub use metrics::{format_reports, ndcg_at, precision_at, MetricReport};
pub use rerank::{rerank, RerankLog};
pub use sampling::{sample_batches, Triple, TripleSampler};
pub use split::{split_folds, Fold, Role};
pub use sweep::{format_sweep, sweep, write_sweep, SweepAxis, SweepRow};
pub use toy::{generate_toy, ToyCorpus, ToySpec};
pub use train::{train, TrainReport};
pub use trec::{Qrels, RunFile};

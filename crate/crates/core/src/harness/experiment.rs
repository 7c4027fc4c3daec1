//! Train on one fold and evaluate on its test queries.

use super::config::ExperimentConfig;
use super::dataset::{Dataset, GraphCache};
use super::metrics::{ndcg_at, precision_at, MetricReport};
use super::rerank::{rerank, RerankLog};
use super::split::Fold;
use super::train::{train, TrainReport};
use super::trec::RunFile;
use crate::error::Result;
use crate::ghrm::Ghrm;

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub model: Ghrm,
    pub report: TrainReport,
    /// Reranked test queries.
    pub run: RunFile,
    pub rerank_log: RerankLog,
    pub ndcg: MetricReport,
    pub precision: MetricReport,
    /// nDCG of the freshly initialized model on the same test queries.
    pub untrained_ndcg: MetricReport,
}

pub fn run_experiment(
    data: &Dataset,
    fold: &Fold,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let mut model = Ghrm::new(cfg.model.clone())?;
    let cache = GraphCache::new();
    let (untrained, _) = rerank(
        &model,
        data,
        &fold.test,
        &cache,
        cfg.candidates,
        "untrained",
    )?;
    let untrained_ndcg = ndcg_at(&untrained, &data.qrels, cfg.eval_cutoff)?;
    let report = train(&mut model, data, &fold.train, &fold.valid, &cfg.train)?;
    let (run, rerank_log) = rerank(
        &model,
        data,
        &fold.test,
        &cache,
        cfg.candidates,
        model.config().variant(),
    )?;
    let ndcg = ndcg_at(&run, &data.qrels, cfg.eval_cutoff)?;
    let precision = precision_at(&run, &data.qrels, cfg.eval_cutoff)?;
    Ok(ExperimentResult {
        model,
        report,
        run,
        rerank_log,
        ndcg,
        precision,
        untrained_ndcg,
    })
}

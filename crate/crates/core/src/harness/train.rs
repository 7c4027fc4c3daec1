//! Pairwise hinge training with Adam.
//!
//! Batches are processed in order. Inside a batch each triple gets its own
//! tape and the per-triple gradients are summed in triple order, so the
//! result does not depend on the thread schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::TrainConfig;
use super::dataset::{Dataset, GraphCache};
use super::metrics::ndcg_at;
use super::rerank::rerank;
use super::sampling::{Triple, TripleSampler};
use crate::autodiff::{AdamState, GradStore, ParamStore, Tape};
use crate::error::{Error, Result};
use crate::ghrm::Ghrm;

/// Size of the fixed triple set whose loss is tracked across epochs.
const MONITOR_TRIPLES: usize = 64;
/// Stream offset separating the monitor draw from the epoch draws.
const MONITOR_STREAM: u64 = 0x006d_6f6e_6974_6f72;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean hinge loss over each epoch's sampled batches, measured while
    /// training.
    pub epoch_losses: Vec<f64>,
    /// Mean hinge loss on one fixed triple set after each epoch.
    pub monitor_losses: Vec<f64>,
    /// Validation nDCG after each epoch; empty without validation queries.
    pub valid_ndcg: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: Option<usize>,
    pub skipped_queries: usize,
}

fn triple_loss(
    model: &Ghrm,
    params: &ParamStore,
    data: &Dataset,
    cache: &GraphCache,
    t: &Triple,
    grad: bool,
) -> Result<(f64, Option<GradStore>)> {
    let query = data.query(&t.qid)?;
    let pos = data.input(cache, &t.qid, &t.pos)?;
    let neg = data.input(cache, &t.qid, &t.neg)?;
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let loss = model.record_hinge(&mut tape, &bound, query, &pos, &neg)?;
    let value = tape.value(loss).item();
    if !grad {
        return Ok((value, None));
    }
    let grads = tape.backward(loss)?;
    Ok((value, Some(bound.collect(&tape, &grads))))
}

fn mean_loss(model: &Ghrm, data: &Dataset, cache: &GraphCache, triples: &[Triple]) -> Result<f64> {
    let losses: Vec<f64> = triples
        .par_iter()
        .map(|t| triple_loss(model, model.params(), data, cache, t, false).map(|(l, _)| l))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

/// One optimizer step on `batch`; returns the mean batch loss.
fn train_batch(
    model: &mut Ghrm,
    adam: &mut AdamState,
    data: &Dataset,
    cache: &GraphCache,
    batch: &[Triple],
    epoch: usize,
    index: usize,
) -> Result<f64> {
    let results: Vec<(f64, Option<GradStore>)> = batch
        .par_iter()
        .map(|t| triple_loss(model, model.params(), data, cache, t, true))
        .collect::<Result<_>>()?;
    let mut total = GradStore::zeros_like(model.params());
    let mut loss = 0.0;
    for (l, g) in &results {
        loss += l;
        total.add_assign(g.as_ref().expect("gradients requested"))?;
    }
    let n = batch.len().max(1) as f64;
    loss /= n;
    total.scale(1.0 / n);
    if !loss.is_finite() || !total.is_finite() {
        return Err(Error::Diverged {
            epoch,
            batch: index,
            loss,
        });
    }
    adam.step(model.params_mut(), &total)?;
    Ok(loss)
}

/// Trains `model` on `train_qids`.
///
/// With validation queries that have judgments, the model is reranked on
/// them after every epoch and the parameters with the best nDCG at
/// `cfg.valid_cutoff` are restored at the end; `cfg.patience > 0` stops
/// after that many epochs without improvement.
pub fn train(
    model: &mut Ghrm,
    data: &Dataset,
    train_qids: &[String],
    valid_qids: &[String],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    data.check_model(model.config().query_len, model.config().window)?;
    if cfg.batches == 0 || cfg.batch_pos == 0 {
        return Err(Error::Config(
            "batches and batch_pos must be positive".into(),
        ));
    }
    let sampler = TripleSampler::new(&data.qrels, &data.candidates, train_qids, |d| {
        data.docs.contains_key(d)
    })?;
    let valid_qids: Vec<String> = valid_qids
        .iter()
        .filter(|q| data.qrels.query(q).is_some() && data.candidates.ranking(q).is_some())
        .cloned()
        .collect();

    let mut cache = GraphCache::new();
    cache.fill(data, sampler.pairs())?;
    let valid_pairs: Vec<(&str, &str)> = valid_qids
        .iter()
        .flat_map(|q| {
            data.candidates
                .ranking(q)
                .unwrap_or_default()
                .iter()
                .map(move |(d, _)| (q.as_str(), d.as_str()))
        })
        .collect();
    cache.fill(data, valid_pairs)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let monitor: Vec<Triple> = {
        let mut m = ChaCha8Rng::seed_from_u64(cfg.seed ^ MONITOR_STREAM);
        (0..MONITOR_TRIPLES)
            .map(|_| sampler.sample(&mut m))
            .collect()
    };
    let mut adam = AdamState::new(cfg.adam, model.params());
    let mut report = TrainReport {
        skipped_queries: sampler.skipped(),
        ..TrainReport::default()
    };
    let mut best: Option<(f64, ParamStore)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.epochs {
        let batches = sampler.sample_epoch(&mut rng, cfg.batches, cfg.batch_pos);
        let mut epoch_loss = 0.0;
        for (b, batch) in batches.iter().enumerate() {
            epoch_loss += train_batch(model, &mut adam, data, &cache, batch, epoch, b + 1)?;
        }
        report.epoch_losses.push(epoch_loss / batches.len() as f64);
        report
            .monitor_losses
            .push(mean_loss(model, data, &cache, &monitor)?);

        if !valid_qids.is_empty() {
            let (run, _) = rerank(model, data, &valid_qids, &cache, usize::MAX, "valid")?;
            let ndcg = ndcg_at(&run, &data.qrels, cfg.valid_cutoff)?.mean;
            report.valid_ndcg.push(ndcg);
            if best.as_ref().is_none_or(|(b, _)| ndcg > *b) {
                best = Some((ndcg, model.params().clone()));
                report.best_epoch = Some(epoch);
                since_best = 0;
            } else {
                since_best += 1;
            }
        }
        log::info!(
            "epoch {epoch}: loss {:.6}, monitor {:.6}{}",
            report.epoch_losses[epoch - 1],
            report.monitor_losses[epoch - 1],
            report
                .valid_ndcg
                .last()
                .map(|v| format!(", valid ndcg {v:.4}"))
                .unwrap_or_default()
        );
        if cfg.patience > 0 && since_best >= cfg.patience {
            log::info!("no validation improvement for {since_best} epochs; stopping");
            break;
        }
    }
    match best {
        Some((_, params)) => model.set_params(params)?,
        None => {
            report.best_epoch =
                (!report.epoch_losses.is_empty()).then_some(report.epoch_losses.len())
        }
    }
    Ok(report)
}

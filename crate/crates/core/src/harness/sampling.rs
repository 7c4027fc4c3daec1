//! Training triples `(query, positive, negative)`.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::trec::{Qrels, RunFile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub qid: String,
    pub pos: String,
    pub neg: String,
}

#[derive(Debug, Clone)]
struct Pool {
    qid: String,
    positives: Vec<String>,
    negatives: Vec<String>,
}

/// Per-query positive and negative pools.
///
/// Positives are judged documents with grade > 0; negatives are candidates
/// with grade 0 or no judgment. Queries lacking either class are skipped.
#[derive(Debug, Clone)]
pub struct TripleSampler {
    pools: Vec<Pool>,
    skipped: usize,
}

impl TripleSampler {
    pub fn new(
        qrels: &Qrels,
        candidates: &RunFile,
        qids: &[String],
        doc_exists: impl Fn(&str) -> bool,
    ) -> Result<Self> {
        let mut pools = Vec::new();
        let mut skipped = 0;
        for qid in qids {
            let positives: Vec<String> = qrels
                .relevant(qid)
                .into_iter()
                .filter(|d| doc_exists(d))
                .map(str::to_string)
                .collect();
            let negatives: Vec<String> = candidates
                .ranking(qid)
                .unwrap_or_default()
                .iter()
                .filter(|(d, _)| qrels.grade(qid, d).unwrap_or(0) == 0 && doc_exists(d))
                .map(|(d, _)| d.clone())
                .collect();
            if positives.is_empty() || negatives.is_empty() {
                skipped += 1;
                continue;
            }
            pools.push(Pool {
                qid: qid.clone(),
                positives,
                negatives,
            });
        }
        if skipped > 0 {
            log::info!("skipped {skipped} queries without both positives and candidate negatives");
        }
        if pools.is_empty() {
            return Err(Error::NoTrainableQuery);
        }
        Ok(Self { pools, skipped })
    }

    /// Queries left out for lacking a class.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn num_queries(&self) -> usize {
        self.pools.len()
    }

    /// Every `(query, document)` pair a triple can reference.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pools.iter().flat_map(|p| {
            p.positives
                .iter()
                .chain(&p.negatives)
                .map(move |d| (p.qid.as_str(), d.as_str()))
        })
    }

    /// Draws a query uniformly, then a positive and a negative uniformly.
    pub fn sample(&self, rng: &mut impl Rng) -> Triple {
        let pool = self
            .pools
            .choose(rng)
            .expect("sampler has at least one query");
        Triple {
            qid: pool.qid.clone(),
            pos: pool
                .positives
                .choose(rng)
                .expect("non-empty positives")
                .clone(),
            neg: pool
                .negatives
                .choose(rng)
                .expect("non-empty negatives")
                .clone(),
        }
    }

    pub fn sample_epoch(
        &self,
        rng: &mut impl Rng,
        batches: usize,
        per_batch: usize,
    ) -> Vec<Vec<Triple>> {
        (0..batches)
            .map(|_| (0..per_batch).map(|_| self.sample(rng)).collect())
            .collect()
    }
}

/// One epoch of batches drawn with a fresh generator seeded by `seed`.
pub fn sample_batches(
    qrels: &Qrels,
    candidates: &RunFile,
    qids: &[String],
    seed: u64,
    batches: usize,
    per_batch: usize,
) -> Result<Vec<Vec<Triple>>> {
    let sampler = TripleSampler::new(qrels, candidates, qids, |_| true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample_epoch(&mut rng, batches, per_batch))
}

//! Rescoring BM25 candidates with the model.

use rayon::prelude::*;

use super::dataset::{Dataset, GraphCache};
use super::trec::{sort_ranking, RunFile};
use crate::error::Result;
use crate::ghrm::Ghrm;

/// What `rerank` left out or could not rescore.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RerankLog {
    /// `(qid, doc_id)` candidates with no document text.
    pub skipped_docs: Vec<(String, String)>,
    /// Queries without in-vocabulary terms; their BM25 order is kept.
    pub fallback_queries: Vec<String>,
}

enum Outcome {
    Scored(Vec<(String, f64)>, Vec<String>),
    Fallback(Vec<(String, f64)>, Vec<String>),
}

/// Rescores the top `depth` candidates of each query in `qids` and sorts by
/// descending score, ties by doc_id. Queries with no candidate list are
/// absent from the output.
pub fn rerank(
    model: &Ghrm,
    data: &Dataset,
    qids: &[String],
    cache: &GraphCache,
    depth: usize,
    tag: &str,
) -> Result<(RunFile, RerankLog)> {
    data.check_model(model.config().query_len, model.config().window)?;
    let outcomes: Vec<(String, Outcome)> = qids
        .par_iter()
        .filter_map(|qid| data.candidates.ranking(qid).map(|list| (qid, list)))
        .map(|(qid, list)| {
            let list = &list[..list.len().min(depth)];
            let (present, missing): (Vec<_>, Vec<_>) =
                list.iter().partition(|(d, _)| data.docs.contains_key(d));
            let missing = missing.into_iter().map(|(d, _)| d.clone()).collect();
            let query = data.query(qid)?;
            if !query.has_terms() {
                return Ok((
                    qid.clone(),
                    Outcome::Fallback(present.into_iter().cloned().collect(), missing),
                ));
            }
            let mut scored = Vec::with_capacity(present.len());
            for (doc, _) in present {
                let input = data.input(cache, qid, doc)?;
                scored.push((doc.clone(), model.score(&input, query)?));
            }
            sort_ranking(&mut scored);
            Ok((qid.clone(), Outcome::Scored(scored, missing)))
        })
        .collect::<Result<_>>()?;

    let mut run = RunFile::new(tag);
    let mut log = RerankLog::default();
    for (qid, outcome) in outcomes {
        let (ranking, missing) = match outcome {
            Outcome::Scored(r, m) => (r, m),
            Outcome::Fallback(r, m) => {
                log::warn!("query {qid} has no in-vocabulary terms; keeping BM25 order");
                log.fallback_queries.push(qid.clone());
                (r, m)
            }
        };
        for doc in missing {
            log::warn!("query {qid}: candidate {doc} has no document text; skipped");
            log.skipped_docs.push((qid.clone(), doc));
        }
        run.rankings.insert(qid, ranking);
    }
    Ok((run, log))
}

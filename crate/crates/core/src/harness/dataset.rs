//! Everything a train/rerank run reads, prepared once.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::trec::{Qrels, RunFile};
use crate::candidates::{Bm25Params, InvertedIndex};
use crate::corpus::{
    prepare_doc, prepare_query, tokenize_all, EmbeddingTable, OovPolicy, PreparedDoc,
    PreparedQuery, RawDoc, RawQuery, TermId, Tokenizer, Vocabulary,
};
use crate::docgraph::{graph_input, GraphInput};
use crate::error::{Error, Result};

/// Where term vectors come from.
#[derive(Debug, Clone, Copy)]
pub enum EmbeddingSource<'a> {
    /// Seeded random vectors of the configured dimension.
    Random,
    /// A word2vec text file; missing terms fall back to seeded vectors.
    File(&'a Path),
    Rows(&'a [(String, Vec<f64>)]),
}

/// Prepared corpus, queries, judgments and BM25 candidates.
///
/// `docs` are truncated to `doc_len` for graph building; the inverted index
/// covers the full vocabulary-filtered text.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub vocab: Vocabulary,
    pub embeddings: EmbeddingTable,
    pub docs: BTreeMap<String, PreparedDoc>,
    pub queries: BTreeMap<String, PreparedQuery>,
    /// Every in-vocabulary title term, for BM25.
    pub query_terms: BTreeMap<String, Vec<TermId>>,
    pub index: InvertedIndex,
    pub qrels: Qrels,
    pub candidates: RunFile,
    pub query_len: usize,
    pub window: usize,
}

impl Dataset {
    /// Builds the vocabulary from `docs` unless one is given, sets up the
    /// embeddings and computes BM25 candidates for every query.
    pub fn build(
        docs: &[RawDoc],
        queries: &[RawQuery],
        qrels: Qrels,
        cfg: &ExperimentConfig,
        vocab: Option<Vocabulary>,
        embeddings: EmbeddingSource<'_>,
    ) -> Result<Self> {
        cfg.model.validate()?;
        let tokenizer = Tokenizer::new();
        let vocab = match vocab {
            Some(v) => v,
            None => Vocabulary::build(tokenize_all(&tokenizer, docs), cfg.min_count)?,
        };
        let policy = OovPolicy::SeededUniform {
            seed: cfg.embedding_seed,
        };
        let embeddings = match embeddings {
            EmbeddingSource::Random => EmbeddingTable::random(&vocab, cfg.embedding_dim, policy)?,
            EmbeddingSource::File(path) => EmbeddingTable::load(path, &vocab, policy)?,
            EmbeddingSource::Rows(rows) => EmbeddingTable::from_rows(&vocab, rows, policy)?,
        };
        let full: Vec<PreparedDoc> = docs
            .par_iter()
            .map(|d| prepare_doc(&d.doc_id, &d.text, &tokenizer, &vocab, usize::MAX))
            .collect();
        let index = InvertedIndex::build(&full)?;
        let docs = full
            .into_iter()
            .map(|mut d| {
                d.term_ids.truncate(cfg.model.doc_len);
                (d.doc_id.clone(), d)
            })
            .collect();
        let mut prepared = BTreeMap::new();
        let mut query_terms = BTreeMap::new();
        for q in queries {
            prepared.insert(
                q.qid.clone(),
                prepare_query(&q.title, &tokenizer, &vocab, cfg.model.query_len)?,
            );
            query_terms.insert(q.qid.clone(), vocab.ids_of(&tokenizer.tokenize(&q.title)));
        }
        let mut data = Self {
            vocab,
            embeddings,
            docs,
            queries: prepared,
            query_terms,
            index,
            qrels,
            candidates: RunFile::new("bm25"),
            query_len: cfg.model.query_len,
            window: cfg.model.window,
        };
        data.candidates = data.bm25_run(cfg.candidates, cfg.bm25);
        Ok(data)
    }

    /// BM25 top-`depth` lists for every query, in qid order.
    pub fn bm25_run(&self, depth: usize, params: Bm25Params) -> RunFile {
        let lists: Vec<_> = self
            .query_terms
            .par_iter()
            .map(|(qid, terms)| self.index.top_candidates(qid, terms, depth, params))
            .collect();
        RunFile::from_candidates("bm25", lists)
    }

    pub fn qids(&self) -> Vec<String> {
        self.queries.keys().cloned().collect()
    }

    pub fn query(&self, qid: &str) -> Result<&PreparedQuery> {
        self.queries
            .get(qid)
            .ok_or_else(|| Error::UnknownQuery(qid.to_string()))
    }

    pub fn graph_input(&self, qid: &str, doc_id: &str) -> Result<GraphInput> {
        let doc = self
            .docs
            .get(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        graph_input(doc, self.query(qid)?, &self.embeddings, self.window)
    }

    /// Cached input when present, otherwise built on the spot.
    pub fn input<'a>(
        &self,
        cache: &'a GraphCache,
        qid: &str,
        doc_id: &str,
    ) -> Result<Cow<'a, GraphInput>> {
        match cache.get(qid, doc_id) {
            Some(g) => Ok(Cow::Borrowed(g)),
            None => self.graph_input(qid, doc_id).map(Cow::Owned),
        }
    }

    pub(crate) fn check_model(&self, query_len: usize, window: usize) -> Result<()> {
        if query_len != self.query_len || window != self.window {
            return Err(Error::Config(format!(
                "model expects query_len {query_len} and window {window}, data was prepared with {} and {}",
                self.query_len, self.window
            )));
        }
        Ok(())
    }
}

/// Graph inputs keyed by `(qid, doc_id)`.
#[derive(Debug, Clone, Default)]
pub struct GraphCache {
    map: HashMap<(String, String), GraphInput>,
}

impl GraphCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, qid: &str, doc_id: &str) -> Option<&GraphInput> {
        self.map.get(&(qid.to_string(), doc_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Builds the missing inputs in parallel. Pairs whose document is
    /// unknown are left out.
    pub fn fill<'p>(
        &mut self,
        data: &Dataset,
        pairs: impl IntoIterator<Item = (&'p str, &'p str)>,
    ) -> Result<()> {
        let mut missing: Vec<(String, String)> = pairs
            .into_iter()
            .filter(|(q, d)| self.get(q, d).is_none() && data.docs.contains_key(*d))
            .map(|(q, d)| (q.to_string(), d.to_string()))
            .collect();
        missing.sort();
        missing.dedup();
        let built: Vec<GraphInput> = missing
            .par_iter()
            .map(|(q, d)| data.graph_input(q, d))
            .collect::<Result<_>>()?;
        self.map.extend(missing.into_iter().zip(built));
        Ok(())
    }
}

//! Inverted index and Okapi BM25 candidate generation for reranking.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{PreparedDoc, TermId};
use crate::error::{Error, Result};

pub const DEFAULT_CANDIDATES: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    /// Position of the document in [`InvertedIndex::doc_ids`].
    pub doc: u32,
    pub tf: u32,
}

/// Postings per term, sorted by document id.
///
/// Documents are numbered in lexicographic `doc_id` order, so sorting by
/// number and by id agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_len: Vec<u32>,
    avg_len: f64,
    postings: BTreeMap<TermId, Vec<Posting>>,
}

/// BM25 ranking for one query, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList {
    pub qid: String,
    pub entries: Vec<(String, f64)>,
}

impl InvertedIndex {
    pub fn build(docs: &[PreparedDoc]) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut order: Vec<&PreparedDoc> = docs.iter().collect();
        order.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        if let Some(w) = order.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
            return Err(Error::DuplicateDocument(w[0].doc_id.clone()));
        }

        let mut postings: BTreeMap<TermId, Vec<Posting>> = BTreeMap::new();
        let mut doc_len = Vec::with_capacity(order.len());
        for (n, doc) in order.iter().enumerate() {
            doc_len.push(doc.term_ids.len() as u32);
            let mut tf: BTreeMap<TermId, u32> = BTreeMap::new();
            for &t in &doc.term_ids {
                *tf.entry(t).or_default() += 1;
            }
            for (t, count) in tf {
                postings.entry(t).or_default().push(Posting {
                    doc: n as u32,
                    tf: count,
                });
            }
        }
        let avg_len = doc_len.iter().map(|&l| l as f64).sum::<f64>() / doc_len.len() as f64;
        Ok(Self {
            doc_ids: order.into_iter().map(|d| d.doc_id.clone()).collect(),
            doc_len,
            avg_len,
            postings,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::jsonio::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        crate::jsonio::read_json(path)
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_number(&self, doc_id: &str) -> Option<usize> {
        self.doc_ids
            .binary_search_by(|d| d.as_str().cmp(doc_id))
            .ok()
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<u32> {
        self.doc_number(doc_id).map(|n| self.doc_len[n])
    }

    pub fn postings(&self, term: TermId) -> &[Posting] {
        self.postings.get(&term).map_or(&[], Vec::as_slice)
    }

    pub fn df(&self, term: TermId) -> usize {
        self.postings(term).len()
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`.
    pub fn bm25_idf(&self, term: TermId) -> f64 {
        let n = self.n_docs() as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_weight(&self, term: TermId, tf: u32, doc: usize, params: Bm25Params) -> f64 {
        let tf = tf as f64;
        let len = self.doc_len[doc] as f64;
        let norm = params.k1 * (1.0 - params.b + params.b * len / self.avg_len);
        self.bm25_idf(term) * tf * (params.k1 + 1.0) / (tf + norm)
    }

    /// BM25 of one document. Repeated query terms count once.
    pub fn bm25_score(&self, query: &[TermId], doc_id: &str, params: Bm25Params) -> Result<f64> {
        let doc = self
            .doc_number(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        let mut score = 0.0;
        for term in unique_terms(query) {
            let postings = self.postings(term);
            if let Ok(i) = postings.binary_search_by_key(&(doc as u32), |p| p.doc) {
                score += self.term_weight(term, postings[i].tf, doc, params);
            }
        }
        Ok(score)
    }

    /// Top `n` documents sharing at least one term with `query`, by
    /// descending score then ascending `doc_id`.
    pub fn top_candidates(
        &self,
        qid: &str,
        query: &[TermId],
        n: usize,
        params: Bm25Params,
    ) -> CandidateList {
        let mut scores = vec![0.0; self.n_docs()];
        let mut touched = vec![false; self.n_docs()];
        for term in unique_terms(query) {
            for p in self.postings(term) {
                let d = p.doc as usize;
                scores[d] += self.term_weight(term, p.tf, d, params);
                touched[d] = true;
            }
        }
        let mut hits: Vec<usize> = (0..self.n_docs()).filter(|&d| touched[d]).collect();
        // doc numbers follow doc_id order, so the index tie-break is the doc_id tie-break
        hits.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        hits.truncate(n);
        CandidateList {
            qid: qid.to_string(),
            entries: hits
                .into_iter()
                .map(|d| (self.doc_ids[d].clone(), scores[d]))
                .collect(),
        }
    }
}

fn unique_terms(query: &[TermId]) -> impl Iterator<Item = TermId> + '_ {
    let mut seen = HashSet::new();
    query.iter().copied().filter(move |t| seen.insert(*t))
}

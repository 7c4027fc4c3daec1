//! Planted-relevance synthetic corpus.
//!
//! Each query owns three keywords and its title is those keywords. A
//! relevant document mixes every keyword into background text. A
//! distractor carries two of them, repeated more often, plus a near-synonym
//! of the third whose embedding has a fixed high cosine with it. Background
//! documents carry none. Document ids are assigned after a shuffle so they
//! say nothing about relevance.
//!
//! The generated embedding table gives every word a random unit vector,
//! except synonyms, which are tilted towards their keyword.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::trec::Qrels;
use crate::corpus::{write_corpus, write_queries, write_word2vec, RawDoc, RawQuery};
use crate::error::{Error, Result};

pub const TOY_CORPUS_FILE: &str = "corpus.jsonl";
pub const TOY_QUERIES_FILE: &str = "queries.tsv";
pub const TOY_QRELS_FILE: &str = "qrels.txt";
pub const TOY_EMBEDDINGS_FILE: &str = "embeddings.txt";

const KEYWORD_SUFFIXES: [char; 3] = ['a', 'b', 'c'];

#[derive(Debug, Clone, PartialEq)]
pub struct ToySpec {
    pub queries: usize,
    pub relevant: usize,
    pub distractors: usize,
    pub background: usize,
    pub background_vocab: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub embedding_dim: usize,
    /// Cosine between a keyword and its synonym.
    pub synonym_cosine: f64,
    pub seed: u64,
}

impl Default for ToySpec {
    /// 20 queries × (4 relevant + 3 distractors + 3 background) = 200 documents.
    fn default() -> Self {
        Self {
            queries: 20,
            relevant: 4,
            distractors: 3,
            background: 3,
            background_vocab: 200,
            min_len: 40,
            max_len: 60,
            embedding_dim: 50,
            synonym_cosine: 0.9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyCorpus {
    pub docs: Vec<RawDoc>,
    pub queries: Vec<RawQuery>,
    pub qrels: Qrels,
    /// `(word, vector)` for every word the generator can emit.
    pub embeddings: Vec<(String, Vec<f64>)>,
}

impl ToyCorpus {
    /// Writes `corpus.jsonl`, `queries.tsv`, `qrels.txt` and
    /// `embeddings.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        write_corpus(&dir.join(TOY_CORPUS_FILE), &self.docs)?;
        write_queries(&dir.join(TOY_QUERIES_FILE), &self.queries)?;
        self.qrels.write(&dir.join(TOY_QRELS_FILE))?;
        write_word2vec(&dir.join(TOY_EMBEDDINGS_FILE), &self.embeddings)
    }
}

fn keyword(q: usize, i: usize) -> String {
    format!("key{q:02}{}", KEYWORD_SUFFIXES[i])
}

fn synonym(q: usize, i: usize) -> String {
    format!("syn{q:02}{}", KEYWORD_SUFFIXES[i])
}

fn unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// A unit vector whose cosine with the unit vector `base` is `cos`.
fn tilted(base: &[f64], cos: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let r = unit_vector(base.len(), rng);
        let along: f64 = r.iter().zip(base).map(|(a, b)| a * b).sum();
        let ortho: Vec<f64> = r.iter().zip(base).map(|(a, b)| a - along * b).collect();
        let norm = ortho.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            let sin = (1.0 - cos * cos).sqrt();
            return base
                .iter()
                .zip(&ortho)
                .map(|(b, o)| cos * b + sin * o / norm)
                .collect();
        }
    }
}

enum Kind {
    Relevant,
    Distractor,
    Background,
}

struct Draft {
    qid: String,
    kind: Kind,
    tokens: Vec<String>,
}

fn background(spec: &ToySpec, rng: &mut ChaCha8Rng) -> Vec<String> {
    let len = rng.random_range(spec.min_len..=spec.max_len);
    (0..len)
        .map(|_| format!("w{:03}", rng.random_range(0..spec.background_vocab)))
        .collect()
}

fn plant(tokens: &mut Vec<String>, word: &str, times: usize, rng: &mut ChaCha8Rng) {
    for _ in 0..times {
        let at = rng.random_range(0..=tokens.len());
        tokens.insert(at, word.to_string());
    }
}

pub fn generate_toy(spec: &ToySpec) -> Result<ToyCorpus> {
    if spec.queries == 0
        || spec.relevant == 0
        || spec.background_vocab == 0
        || spec.min_len > spec.max_len
        || spec.embedding_dim < 2
        || !(-1.0..=1.0).contains(&spec.synonym_cosine)
    {
        return Err(Error::Config(format!("degenerate toy spec {spec:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut drafts = Vec::new();
    let mut queries = Vec::new();
    for q in 0..spec.queries {
        let qid = format!("{}", q + 1);
        let words: Vec<String> = (0..KEYWORD_SUFFIXES.len()).map(|i| keyword(q, i)).collect();
        queries.push(RawQuery {
            qid: qid.clone(),
            title: words.join(" "),
        });
        for _ in 0..spec.relevant {
            let mut tokens = background(spec, &mut rng);
            for w in &words {
                let times = rng.random_range(2..=3);
                plant(&mut tokens, w, times, &mut rng);
            }
            drafts.push(Draft {
                qid: qid.clone(),
                kind: Kind::Relevant,
                tokens,
            });
        }
        for d in 0..spec.distractors {
            let mut tokens = background(spec, &mut rng);
            let omitted = d % words.len();
            for (i, w) in words.iter().enumerate() {
                let times = rng.random_range(3..=4);
                if i == omitted {
                    plant(&mut tokens, &synonym(q, i), times, &mut rng);
                } else {
                    plant(&mut tokens, w, times, &mut rng);
                }
            }
            drafts.push(Draft {
                qid: qid.clone(),
                kind: Kind::Distractor,
                tokens,
            });
        }
        for _ in 0..spec.background {
            drafts.push(Draft {
                qid: qid.clone(),
                kind: Kind::Background,
                tokens: background(spec, &mut rng),
            });
        }
    }
    drafts.shuffle(&mut rng);
    let mut docs = Vec::with_capacity(drafts.len());
    let mut qrels = Qrels::new();
    for (i, draft) in drafts.into_iter().enumerate() {
        let doc_id = format!("doc{i:04}");
        match draft.kind {
            Kind::Relevant => qrels.insert(draft.qid.as_str(), doc_id.as_str(), 1),
            Kind::Distractor => qrels.insert(draft.qid.as_str(), doc_id.as_str(), 0),
            Kind::Background => {}
        }
        docs.push(RawDoc {
            doc_id,
            text: draft.tokens.join(" "),
        });
    }
    let mut embeddings: Vec<(String, Vec<f64>)> = (0..spec.background_vocab)
        .map(|w| {
            (
                format!("w{w:03}"),
                unit_vector(spec.embedding_dim, &mut rng),
            )
        })
        .collect();
    for q in 0..spec.queries {
        for i in 0..KEYWORD_SUFFIXES.len() {
            let key = unit_vector(spec.embedding_dim, &mut rng);
            let syn = tilted(&key, spec.synonym_cosine, &mut rng);
            embeddings.push((keyword(q, i), key));
            embeddings.push((synonym(q, i), syn));
        }
    }
    Ok(ToyCorpus {
        docs,
        queries,
        qrels,
        embeddings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    #[test]
    fn default_sizes() {
        let toy = generate_toy(&ToySpec::default()).unwrap();
        assert_eq!(toy.docs.len(), 200);
        assert_eq!(toy.queries.len(), 20);
        assert_eq!(toy.qrels.qids().count(), 20);
        assert!(toy.qrels.qids().all(|q| toy.qrels.relevant(q).len() == 4));
    }

    #[test]
    fn relevant_docs_hold_every_keyword_and_distractors_miss_one() {
        let toy = generate_toy(&ToySpec::default()).unwrap();
        let text: std::collections::HashMap<&str, Vec<String>> = toy
            .docs
            .iter()
            .map(|d| (d.doc_id.as_str(), tokenize(&d.text)))
            .collect();
        for q in &toy.queries {
            let words = tokenize(&q.title);
            for (doc, grade) in toy.qrels.query(&q.qid).unwrap() {
                let present = words
                    .iter()
                    .filter(|w| text[doc.as_str()].contains(w))
                    .count();
                assert_eq!(present, if *grade > 0 { 3 } else { 2 });
            }
        }
    }

    #[test]
    fn synonyms_have_the_requested_cosine() {
        let toy = generate_toy(&ToySpec::default()).unwrap();
        let find = |w: &str| {
            toy.embeddings
                .iter()
                .find(|(t, _)| t == w)
                .unwrap()
                .1
                .clone()
        };
        let (k, s) = (find("key07b"), find("syn07b"));
        let dot: f64 = k.iter().zip(&s).map(|(a, b)| a * b).sum();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((dot - 0.9).abs() < 1e-12);
        assert!((norm(&k) - 1.0).abs() < 1e-12 && (norm(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeded() {
        let a = generate_toy(&ToySpec::default()).unwrap();
        assert_eq!(a, generate_toy(&ToySpec::default()).unwrap());
        let b = generate_toy(&ToySpec {
            seed: 1,
            ..ToySpec::default()
        })
        .unwrap();
        assert_ne!(a.docs, b.docs);
    }
}

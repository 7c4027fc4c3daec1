//! Text normalization, vocabulary and IDF statistics, embeddings, and
//! fixed-length query/document preparation.

mod embeddings;
mod io;
mod prepare;
mod tokenize;
mod vocab;

pub use embeddings::{write_word2vec, EmbeddingTable, OovPolicy, OOV_INIT_RANGE};
pub use io::{read_corpus, read_queries, write_corpus, write_queries, RawDoc, RawQuery};
pub use prepare::{prepare_doc, prepare_query, PreparedDoc, PreparedQuery};
pub use tokenize::{tokenize, Tokenizer};
pub use vocab::{idf_from_counts, TermId, Vocabulary};

use rayon::prelude::*;

/// Tokenizes documents in parallel; output order matches input order.
pub fn tokenize_all(tokenizer: &Tokenizer, docs: &[RawDoc]) -> Vec<Vec<String>> {
    docs.par_iter()
        .map(|d| tokenizer.tokenize(&d.text))
        .collect()
}

use serde::{Deserialize, Serialize};

use super::tokenize::Tokenizer;
use super::vocab::{TermId, Vocabulary};
use crate::error::Result;

/// A query title cut or zero-padded to exactly `M` slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedQuery {
    /// `None` in padded slots.
    pub term_ids: Vec<Option<TermId>>,
    /// `true` for real terms.
    pub pad_mask: Vec<bool>,
    /// Zero in padded slots.
    pub idf: Vec<f64>,
}

impl PreparedQuery {
    pub fn len(&self) -> usize {
        self.term_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.term_ids.is_empty()
    }

    pub fn real_terms(&self) -> impl Iterator<Item = TermId> + '_ {
        self.term_ids.iter().flatten().copied()
    }

    pub fn has_terms(&self) -> bool {
        self.pad_mask.iter().any(|&m| m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparedDoc {
    pub doc_id: String,
    pub term_ids: Vec<TermId>,
}

/// Tokenizes `title`, drops out-of-vocabulary tokens, keeps the first
/// `query_len` and pads the rest.
pub fn prepare_query(
    title: &str,
    tokenizer: &Tokenizer,
    vocab: &Vocabulary,
    query_len: usize,
) -> Result<PreparedQuery> {
    let mut ids = vocab.ids_of(&tokenizer.tokenize(title));
    ids.truncate(query_len);
    let mut term_ids = Vec::with_capacity(query_len);
    let mut pad_mask = Vec::with_capacity(query_len);
    let mut idf = Vec::with_capacity(query_len);
    for slot in 0..query_len {
        match ids.get(slot) {
            Some(&id) => {
                term_ids.push(Some(id));
                pad_mask.push(true);
                idf.push(vocab.idf(id)?);
            }
            None => {
                term_ids.push(None);
                pad_mask.push(false);
                idf.push(0.0);
            }
        }
    }
    Ok(PreparedQuery {
        term_ids,
        pad_mask,
        idf,
    })
}

/// Tokenizes `text`, drops out-of-vocabulary tokens, then keeps the first
/// `doc_len` ids.
pub fn prepare_doc(
    doc_id: &str,
    text: &str,
    tokenizer: &Tokenizer,
    vocab: &Vocabulary,
    doc_len: usize,
) -> PreparedDoc {
    let mut term_ids = vocab.ids_of(&tokenizer.tokenize(text));
    term_ids.truncate(doc_len);
    PreparedDoc {
        doc_id: doc_id.to_string(),
        term_ids,
    }
}

//! Neural ad-hoc retrieval with graph-based hierarchical relevance matching.
//!
//! The pipeline: [`corpus`] turns raw text into vocabulary-filtered term
//! sequences, [`candidates`] produces BM25 top-N lists, [`docgraph`] turns a
//! query/document pair into a graph-of-words with cosine node features,
//! [`ghrm`] scores that graph, and [`harness`] trains, reranks and
//! evaluates. [`autodiff`] supplies the gradients.

pub mod autodiff;
pub mod candidates;
pub mod corpus;
pub mod docgraph;
pub mod error;
pub mod ghrm;
pub mod harness;
mod jsonio;

pub use error::{Error, Result};

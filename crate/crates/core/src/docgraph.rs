//! Graph-of-words construction and the query/document interaction matrix.
//!
//! Nodes are the unique terms of a document in first-occurrence order.
//! Edge weight `(i, j)` counts the sliding windows that contain both terms;
//! a pair is counted once per window no matter how often either term
//! repeats inside it.

use serde::{Deserialize, Serialize};

use crate::autodiff::Matrix;
use crate::corpus::{EmbeddingTable, PreparedDoc, PreparedQuery, TermId, Vocabulary};
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentGraph {
    pub node_terms: Vec<TermId>,
    /// Integer co-occurrence counts stored as `f64`; symmetric, zero diagonal.
    pub adjacency: Matrix,
    /// `D^{-1/2} A D^{-1/2}`.
    pub normalized: Matrix,
}

/// The model input for one query/document pair: raw adjacency and the
/// `n×M` cosine interaction matrix (the initial node features).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub adjacency: Matrix,
    pub interaction: Matrix,
}

impl GraphInput {
    /// A document with no in-vocabulary token.
    pub fn empty(query_len: usize) -> Self {
        Self {
            adjacency: Matrix::zeros(0, 0),
            interaction: Matrix::zeros(0, query_len),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.rows()
    }

    /// Relabels nodes so that new node `i` is old node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            adjacency: self.adjacency.select_square(perm),
            interaction: self.interaction.select_rows(perm),
        }
    }
}

pub fn build_graph(doc: &PreparedDoc, window: usize) -> Result<DocumentGraph> {
    if window < 2 {
        return Err(Error::Config(format!(
            "window must be at least 2, got {window}"
        )));
    }
    if doc.term_ids.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let mut node_terms: Vec<TermId> = Vec::new();
    let mut node_of = std::collections::HashMap::new();
    let positions: Vec<usize> = doc
        .term_ids
        .iter()
        .map(|&t| {
            *node_of.entry(t).or_insert_with(|| {
                node_terms.push(t);
                node_terms.len() - 1
            })
        })
        .collect();

    let n = node_terms.len();
    let mut adjacency = Matrix::zeros(n, n);
    let span = window.min(positions.len());
    let mut members: Vec<usize> = Vec::with_capacity(span);
    for start in 0..=positions.len() - span {
        members.clear();
        members.extend_from_slice(&positions[start..start + span]);
        members.sort_unstable();
        members.dedup();
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                adjacency.set(i, j, adjacency.get(i, j) + 1.0);
                adjacency.set(j, i, adjacency.get(j, i) + 1.0);
            }
        }
    }
    let normalized = normalize(&adjacency);
    Ok(DocumentGraph {
        node_terms,
        adjacency,
        normalized,
    })
}

/// Symmetric degree normalization. Zero-degree nodes get all-zero rows and
/// columns.
pub fn normalize(adjacency: &Matrix) -> Matrix {
    let n = adjacency.rows();
    let degree: Vec<f64> = (0..n).map(|i| adjacency.row(i).iter().sum()).collect();
    Matrix::from_fn(n, n, |i, j| {
        let d = degree[i] * degree[j];
        if d > 0.0 {
            adjacency.get(i, j) / d.sqrt()
        } else {
            0.0
        }
    })
}

/// Cosine similarity between each node term and each real query term;
/// padded query slots are zero.
pub fn interaction(
    node_terms: &[TermId],
    query: &PreparedQuery,
    emb: &EmbeddingTable,
) -> Result<Matrix> {
    let unit = |id: TermId| -> Result<Vec<f64>> {
        let v = emb.row(id)?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNormEmbedding(format!("#{}", id.index())));
        }
        Ok(v.iter().map(|x| x / norm).collect())
    };
    let query_vecs = query
        .term_ids
        .iter()
        .map(|slot| slot.map(unit).transpose())
        .collect::<Result<Vec<_>>>()?;
    let mut s = Matrix::zeros(node_terms.len(), query.len());
    for (i, &t) in node_terms.iter().enumerate() {
        let e = unit(t)?;
        for (j, q) in query_vecs.iter().enumerate() {
            if let Some(q) = q {
                let c: f64 = e.iter().zip(q).map(|(a, b)| a * b).sum();
                s.set(i, j, c.clamp(-1.0, 1.0));
            }
        }
    }
    Ok(s)
}

/// Graph plus interaction matrix for a pair; an empty document yields an
/// empty input rather than an error.
pub fn graph_input(
    doc: &PreparedDoc,
    query: &PreparedQuery,
    emb: &EmbeddingTable,
    window: usize,
) -> Result<GraphInput> {
    if doc.term_ids.is_empty() {
        return Ok(GraphInput::empty(query.len()));
    }
    let graph = build_graph(doc, window)?;
    let interaction = interaction(&graph.node_terms, query, emb)?;
    Ok(GraphInput {
        adjacency: graph.adjacency,
        interaction,
    })
}

/// Debug view: `{"nodes": [terms], "edges": [[i, j, count], ...]}` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDump {
    pub nodes: Vec<String>,
    pub edges: Vec<(usize, usize, u64)>,
}

impl DocumentGraph {
    pub fn num_nodes(&self) -> usize {
        self.node_terms.len()
    }

    pub fn dump(&self, vocab: &Vocabulary) -> GraphDump {
        let nodes = self
            .node_terms
            .iter()
            .map(|&t| vocab.term(t).unwrap_or("<unk>").to_string())
            .collect();
        let n = self.num_nodes();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let c = self.adjacency.get(i, j);
                if c > 0.0 {
                    edges.push((i, j, c as u64));
                }
            }
        }
        GraphDump { nodes, edges }
    }
}

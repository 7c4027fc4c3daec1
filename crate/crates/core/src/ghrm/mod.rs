//! Graph-based hierarchical relevance matching.
//!
//! A forward pass takes a document graph whose node features are the
//! cosine interactions with the query terms, then runs `T` blocks of
//! gated message passing followed by attention pooling. The per-term
//! top-`k` readouts of the initial features and of every block output are
//! stacked, scored term by term with a shared MLP, and mixed with
//! IDF-driven gate weights.

mod config;
mod layers;
mod model;

pub use config::{pooled_size, ModelConfig, Pooling};
pub use layers::{
    assemble_signal, gate_weights, gnn_layer, hinge, hinge_loss, readout, rsap, score, BlockVars,
    GruVars, MlpVars, PoolOutput,
};
pub use model::{Forward, Ghrm, CONFIG_FILE, PARAMS_FILE};

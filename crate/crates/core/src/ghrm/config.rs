use serde::{Deserialize, Serialize};

use crate::docgraph::DEFAULT_WINDOW;
use crate::error::{Error, Result};

/// What happens between blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Attention-scored top-rank selection followed by soft rescaling.
    Rsap,
    /// No selection and no rescaling: every block sees the full graph.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Number of GNN + pooling blocks (`T`).
    pub blocks: usize,
    /// Fraction of nodes kept by each pooling step, in `(0, 1]`.
    pub rate: f64,
    /// Values kept per query term by each readout.
    pub topk: usize,
    /// Query slots `M`; also the node feature width in every block.
    pub query_len: usize,
    /// Document truncation length.
    pub doc_len: usize,
    /// Hidden width of the shared scoring MLP.
    pub hidden: usize,
    /// Co-occurrence window.
    pub window: usize,
    pub pooling: Pooling,
    /// Initial value of the gating scale.
    pub gate_init: f64,
    /// Parameter initialization seed.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            blocks: 2,
            rate: 0.8,
            topk: 40,
            query_len: 4,
            doc_len: 300,
            hidden: 64,
            window: DEFAULT_WINDOW,
            pooling: Pooling::Rsap,
            gate_init: 1.0,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(Error::Config(format!(
                "rate must be in (0, 1], got {}",
                self.rate
            )));
        }
        if self.topk == 0 {
            return Err(Error::Config("topk must be at least 1".into()));
        }
        if self.query_len == 0 || self.doc_len == 0 || self.hidden == 0 {
            return Err(Error::Config(
                "query_len, doc_len and hidden must be positive".into(),
            ));
        }
        if self.window < 2 {
            return Err(Error::Config(format!(
                "window must be at least 2, got {}",
                self.window
            )));
        }
        Ok(())
    }

    /// Rows of the assembled signal, `k(T+1)`.
    pub fn signal_rows(&self) -> usize {
        self.topk * (self.blocks + 1)
    }

    /// `rate = 1` with attention rescaling still applied.
    pub fn is_soft_only(&self) -> bool {
        self.pooling == Pooling::Rsap && self.rate == 1.0
    }

    /// Human-readable variant label.
    pub fn variant(&self) -> &'static str {
        match self.pooling {
            Pooling::None => "GHRM-nopool",
            Pooling::Rsap if self.is_soft_only() => "GHRM-soft",
            Pooling::Rsap => "GHRM",
        }
    }
}

/// `ceil(m * rate)`, at least one node when `m > 0`.
///
/// Products within 1e-9 of an integer are snapped first so that e.g.
/// `5 * 0.6` keeps 3 nodes, not 4.
pub fn pooled_size(m: usize, rate: f64) -> usize {
    if m == 0 {
        return 0;
    }
    let x = m as f64 * rate;
    let nearest = x.round();
    let keep = if (x - nearest).abs() < 1e-9 {
        nearest
    } else {
        x.ceil()
    };
    (keep as usize).clamp(1, m)
}

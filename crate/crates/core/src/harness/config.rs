//! Experiment configuration as plain `key = value` text.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error so that typos do not silently fall back to defaults.

use std::fmt::Write as _;
use std::path::Path;

use crate::autodiff::AdamConfig;
use crate::candidates::{Bm25Params, DEFAULT_CANDIDATES};
use crate::error::{Error, Result};
use crate::ghrm::{ModelConfig, Pooling};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batches: usize,
    /// Triples per batch (one positive and one negative each).
    pub batch_pos: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Stop after this many epochs without validation improvement; 0 disables.
    pub patience: usize,
    /// Cutoff of the validation nDCG used for checkpoint selection.
    pub valid_cutoff: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batches: 32,
            batch_pos: 16,
            adam: AdamConfig::default(),
            seed: 0,
            patience: 0,
            valid_cutoff: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub bm25: Bm25Params,
    pub candidates: usize,
    pub min_count: usize,
    pub embedding_dim: usize,
    pub embedding_seed: u64,
    pub eval_cutoff: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            bm25: Bm25Params::default(),
            candidates: DEFAULT_CANDIDATES,
            min_count: 10,
            embedding_dim: 300,
            embedding_seed: 0,
            eval_cutoff: 20,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

impl ExperimentConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "blocks" => self.model.blocks = parse_value(key, v)?,
            "rate" => self.model.rate = parse_value(key, v)?,
            "topk" => self.model.topk = parse_value(key, v)?,
            "window" => self.model.window = parse_value(key, v)?,
            "query_len" => self.model.query_len = parse_value(key, v)?,
            "doc_len" => self.model.doc_len = parse_value(key, v)?,
            "hidden" => self.model.hidden = parse_value(key, v)?,
            "gate_init" => self.model.gate_init = parse_value(key, v)?,
            "model_seed" => self.model.seed = parse_value(key, v)?,
            "pooling" => {
                self.model.pooling = match v {
                    "rsap" => Pooling::Rsap,
                    "none" | "nopool" => Pooling::None,
                    _ => {
                        return Err(Error::Config(format!(
                            "pooling must be rsap or none, got {v:?}"
                        )))
                    }
                }
            }
            "lr" => self.train.adam.lr = parse_value(key, v)?,
            "epochs" => self.train.epochs = parse_value(key, v)?,
            "batches" => self.train.batches = parse_value(key, v)?,
            "batch_pos" => self.train.batch_pos = parse_value(key, v)?,
            "seed" => self.train.seed = parse_value(key, v)?,
            "patience" => self.train.patience = parse_value(key, v)?,
            "valid_cutoff" => self.train.valid_cutoff = parse_value(key, v)?,
            "bm25_k1" => self.bm25.k1 = parse_value(key, v)?,
            "bm25_b" => self.bm25.b = parse_value(key, v)?,
            "candidates" => self.candidates = parse_value(key, v)?,
            "min_count" => self.min_count = parse_value(key, v)?,
            "embedding_dim" => self.embedding_dim = parse_value(key, v)?,
            "embedding_seed" => self.embedding_seed = parse_value(key, v)?,
            "eval_cutoff" => self.eval_cutoff = parse_value(key, v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected key = value"))?;
            cfg.set(key, value)
                .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let m = &self.model;
        let t = &self.train;
        let pooling = match m.pooling {
            Pooling::Rsap => "rsap",
            Pooling::None => "none",
        };
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            writeln!(out, "{k} = {v}").expect("writing to a String cannot fail");
        };
        put("blocks", m.blocks.to_string());
        put("rate", m.rate.to_string());
        put("topk", m.topk.to_string());
        put("window", m.window.to_string());
        put("query_len", m.query_len.to_string());
        put("doc_len", m.doc_len.to_string());
        put("hidden", m.hidden.to_string());
        put("gate_init", m.gate_init.to_string());
        put("model_seed", m.seed.to_string());
        put("pooling", pooling.to_string());
        put("lr", t.adam.lr.to_string());
        put("epochs", t.epochs.to_string());
        put("batches", t.batches.to_string());
        put("batch_pos", t.batch_pos.to_string());
        put("seed", t.seed.to_string());
        put("patience", t.patience.to_string());
        put("valid_cutoff", t.valid_cutoff.to_string());
        put("bm25_k1", self.bm25.k1.to_string());
        put("bm25_b", self.bm25.b.to_string());
        put("candidates", self.candidates.to_string());
        put("min_count", self.min_count.to_string());
        put("embedding_dim", self.embedding_dim.to_string());
        put("embedding_seed", self.embedding_seed.to_string());
        put("eval_cutoff", self.eval_cutoff.to_string());
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

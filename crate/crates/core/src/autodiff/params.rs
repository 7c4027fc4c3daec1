//! Named parameter sets, their gradients, and the checkpoint container.
//!
//! Checkpoint format (JSON, stable):
//!
//! ```json
//! {
//!   "format": "ghrm-params",
//!   "version": 1,
//!   "params": [
//!     { "name": "block0.w_a", "rows": 4, "cols": 4, "data": [ ...row-major... ] }
//!   ]
//! }
//! ```
//!
//! Parameters appear in insertion order. Numbers are written in shortest
//! round-trip form, so a save/load cycle is bit-exact.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::tape::{Gradients, Tape, Var};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "ghrm-params";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Matrix>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a parameter. Re-inserting an existing name replaces its value.
    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        let name = name.into();
        if let Some(&i) = self.index.get(&name) {
            self.values[i] = value;
            return ParamId(i);
        }
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    pub fn expect_id(&self, name: &str) -> Result<ParamId> {
        self.id(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    /// Total number of scalar entries.
    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }

    /// Records every parameter as a trainable leaf on `tape`.
    pub fn bind(&self, tape: &mut Tape) -> Bound {
        Bound {
            vars: self.values.iter().map(|v| tape.param(v.clone())).collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            params: self
                .iter()
                .map(|(name, m)| CheckpointEntry {
                    name: name.to_string(),
                    rows: m.rows(),
                    cols: m.cols(),
                    data: m.data().to_vec(),
                })
                .collect(),
        };
        let text =
            serde_json::to_string(&file).map_err(|e| Error::json("serializing checkpoint", e))?;
        std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let file: CheckpointFile = serde_json::from_str(&text)
            .map_err(|e| Error::json(format!("parsing {}", path.display()), e))?;
        if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
            return Err(Error::parse(
                path,
                1,
                format!("unsupported checkpoint {} v{}", file.format, file.version),
            ));
        }
        let mut store = ParamStore::new();
        for entry in file.params {
            let m = Matrix::from_vec(entry.rows, entry.cols, entry.data)?;
            store.insert(entry.name, m);
        }
        Ok(store)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    params: Vec<CheckpointEntry>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointEntry {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Tape handles for a [`ParamStore`] bound by [`ParamStore::bind`].
#[derive(Debug, Clone)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }

    /// Collects per-parameter gradients; parameters the loss does not reach
    /// get zeros.
    pub fn collect(&self, tape: &Tape, grads: &Gradients) -> GradStore {
        GradStore {
            grads: self
                .vars
                .iter()
                .map(|&v| {
                    grads.get(v).cloned().unwrap_or_else(|| {
                        let (r, c) = tape.shape(v);
                        Matrix::zeros(r, c)
                    })
                })
                .collect(),
        }
    }
}

/// One gradient matrix per parameter, shape-matched to its [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradStore {
    grads: Vec<Matrix>,
}

impl GradStore {
    pub fn zeros_like(params: &ParamStore) -> Self {
        Self {
            grads: params
                .values
                .iter()
                .map(|m| Matrix::zeros(m.rows(), m.cols()))
                .collect(),
        }
    }

    /// Gradients in parameter insertion order.
    pub fn from_matrices(grads: Vec<Matrix>) -> Self {
        Self { grads }
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.grads[id.0]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Matrix> {
        self.grads.iter()
    }

    pub fn add_assign(&mut self, other: &GradStore) -> Result<()> {
        if self.grads.len() != other.grads.len() {
            return Err(Error::ShapeMismatch {
                op: "grad_store_add",
                left: (self.grads.len(), 1),
                right: (other.grads.len(), 1),
            });
        }
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.grads {
            for x in g.data_mut() {
                *x *= factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(Matrix::is_finite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut store = ParamStore::new();
        store.insert(
            "a",
            Matrix::from_rows(&[[0.1, -1.0 / 3.0], [f64::MIN_POSITIVE, 1e300]]),
        );
        store.insert("c", Matrix::scalar(std::f64::consts::PI));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.json");
        store.save(&path).unwrap();
        let loaded = ParamStore::load(&path).unwrap();
        assert_eq!(loaded, store);
        assert_eq!(loaded.name(loaded.id("c").unwrap()), "c");
    }

    #[test]
    fn load_rejects_foreign_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        std::fs::write(&path, r#"{"format":"other","version":1,"params":[]}"#).unwrap();
        assert!(ParamStore::load(&path).is_err());
    }
}

//! Deterministic five-way query folds.
//!
//! Query ids are sorted, shuffled with a seeded generator and dealt into
//! five contiguous chunks. Fold `f` tests on chunk `f`, validates on chunk
//! `f + 1 (mod 5)` and trains on the other three, so every query is tested
//! exactly once across the five folds.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const NUM_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Train,
    Valid,
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Valid => "valid",
            Role::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

impl Fold {
    /// `qid<TAB>role` lines, sorted by qid.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<(&str, Role)> = self
            .train
            .iter()
            .map(|q| (q.as_str(), Role::Train))
            .chain(self.valid.iter().map(|q| (q.as_str(), Role::Valid)))
            .chain(self.test.iter().map(|q| (q.as_str(), Role::Test)))
            .collect();
        rows.sort();
        let mut out = String::new();
        for (q, r) in rows {
            writeln!(out, "{q}\t{}", r.as_str()).expect("writing to a String cannot fail");
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut fold = Fold::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let Some((qid, role)) = line.split_once('\t') else {
                return Err(Error::parse(path, i + 1, "expected qid<TAB>role"));
            };
            let target = match role.trim() {
                "train" => &mut fold.train,
                "valid" => &mut fold.valid,
                "test" => &mut fold.test,
                other => return Err(Error::parse(path, i + 1, format!("unknown role {other:?}"))),
            };
            target.push(qid.trim().to_string());
        }
        Ok(fold)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

/// The five folds for `qids` under `seed`.
pub fn split_folds(qids: &[String], seed: u64) -> Result<Vec<Fold>> {
    if qids.len() < NUM_FOLDS {
        return Err(Error::Config(format!(
            "need at least {NUM_FOLDS} queries to split, got {}",
            qids.len()
        )));
    }
    let mut order = qids.to_vec();
    order.sort();
    order.dedup();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = order.len();
    let chunks: Vec<Vec<String>> = (0..NUM_FOLDS)
        .map(|c| order[c * n / NUM_FOLDS..(c + 1) * n / NUM_FOLDS].to_vec())
        .collect();
    Ok((0..NUM_FOLDS)
        .map(|f| {
            let v = (f + 1) % NUM_FOLDS;
            let mut fold = Fold {
                test: chunks[f].clone(),
                valid: chunks[v].clone(),
                train: (0..NUM_FOLDS)
                    .filter(|&c| c != f && c != v)
                    .flat_map(|c| chunks[c].iter().cloned())
                    .collect(),
            };
            fold.train.sort();
            fold.valid.sort();
            fold.test.sort();
            fold
        })
        .collect())
}

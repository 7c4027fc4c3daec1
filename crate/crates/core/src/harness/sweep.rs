//! One-axis-at-a-time hyperparameter sweeps.
//!
//! Every grid point changes a single setting of the base configuration
//! and reuses its seeds, trains on each given fold and reports the
//! fold-averaged test metrics.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::dataset::Dataset;
use super::experiment::run_experiment;
use super::split::Fold;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Rate(Vec<f64>),
    Blocks(Vec<usize>),
    Topk(Vec<usize>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Rate(_) => "rate",
            SweepAxis::Blocks(_) => "blocks",
            SweepAxis::Topk(_) => "topk",
        }
    }

    fn points(&self, base: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
        let with = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = base.clone();
            f(&mut c);
            c
        };
        match self {
            SweepAxis::Rate(v) => v
                .iter()
                .map(|&r| (r.to_string(), with(&|c| c.model.rate = r)))
                .collect(),
            SweepAxis::Blocks(v) => v
                .iter()
                .map(|&t| (t.to_string(), with(&|c| c.model.blocks = t)))
                .collect(),
            SweepAxis::Topk(v) => v
                .iter()
                .map(|&k| (k.to_string(), with(&|c| c.model.topk = k)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: String,
    pub variant: &'static str,
    pub ndcg: f64,
    pub precision: f64,
    pub final_loss: f64,
}

pub fn sweep(
    data: &Dataset,
    folds: &[Fold],
    base: &ExperimentConfig,
    axes: &[SweepAxis],
) -> Result<Vec<SweepRow>> {
    if folds.is_empty() {
        return Err(Error::Config("sweep needs at least one fold".into()));
    }
    let mut rows = Vec::new();
    for axis in axes {
        for (value, cfg) in axis.points(base) {
            let (mut ndcg, mut precision, mut loss) = (0.0, 0.0, 0.0);
            for fold in folds {
                let r = run_experiment(data, fold, &cfg)?;
                ndcg += r.ndcg.mean;
                precision += r.precision.mean;
                loss += r.report.epoch_losses.last().copied().unwrap_or(f64::NAN);
            }
            let n = folds.len() as f64;
            let row = SweepRow {
                axis: axis.name(),
                value,
                variant: cfg.model.variant(),
                ndcg: ndcg / n,
                precision: precision / n,
                final_loss: loss / n,
            };
            log::info!(
                "sweep {}={} ({}): ndcg {:.4}",
                row.axis,
                row.value,
                row.variant,
                row.ndcg
            );
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Tab-separated table with a header line.
pub fn format_sweep(rows: &[SweepRow], cutoff: usize) -> String {
    let mut out = format!("axis\tvalue\tvariant\tndcg@{cutoff}\tP@{cutoff}\tfinal_loss\n");
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.6}",
            r.axis, r.value, r.variant, r.ndcg, r.precision, r.final_loss
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Writes `sweep.tsv` plus one `sweep_<axis>.tsv` series per axis; returns
/// the written paths.
pub fn write_sweep(dir: &Path, rows: &[SweepRow], cutoff: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let write = |path: PathBuf, text: String| -> Result<PathBuf> {
        std::fs::write(&path, text)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        Ok(path)
    };
    let mut paths = vec![write(dir.join("sweep.tsv"), format_sweep(rows, cutoff))?];
    let mut axes: Vec<&str> = rows.iter().map(|r| r.axis).collect();
    axes.dedup();
    for axis in axes {
        let mut text = format!("{axis}\tndcg@{cutoff}\tP@{cutoff}\n");
        for r in rows.iter().filter(|r| r.axis == axis) {
            writeln!(text, "{}\t{:.4}\t{:.4}", r.value, r.ndcg, r.precision)
                .expect("writing to a String cannot fail");
        }
        paths.push(write(dir.join(format!("sweep_{axis}.tsv")), text)?);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_grid_expands_to_one_config_each() {
        let base = ExperimentConfig::default();
        let pts = SweepAxis::Rate(vec![0.4, 0.6, 0.8, 1.0]).points(&base);
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[3].1.model.variant(), "GHRM-soft");
        assert_eq!(pts[0].1.model.variant(), "GHRM");
        assert!(pts.iter().all(|(_, c)| c.train == base.train));
    }

    #[test]
    fn table_layout() {
        let rows = vec![SweepRow {
            axis: "rate",
            value: "1".into(),
            variant: "GHRM-soft",
            ndcg: 0.5,
            precision: 0.25,
            final_loss: 0.1,
        }];
        assert_eq!(
            format_sweep(&rows, 5),
            "axis\tvalue\tvariant\tndcg@5\tP@5\tfinal_loss\nrate\t1\tGHRM-soft\t0.5000\t0.2500\t0.100000\n"
        );
        let dir = tempfile::tempdir().unwrap();
        let paths = write_sweep(dir.path(), &rows, 5).unwrap();
        assert_eq!(paths.len(), 2);
        let series = std::fs::read_to_string(&paths[1]).unwrap();
        assert_eq!(series, "rate\tndcg@5\tP@5\n1\t0.5000\t0.2500\n");
    }
}

//! Cutoff metrics over a run.
//!
//! nDCG uses gain = grade and discount `1 / log2(rank + 1)`; the ideal
//! ranking is built from every judged grade of the query, not only the
//! retrieved ones. Only queries present in the run with at least one
//! relevant judgment are averaged; the rest are counted in `excluded`.

use std::collections::BTreeMap;

use super::trec::{Qrels, RunFile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub name: String,
    pub per_query: BTreeMap<String, f64>,
    pub mean: f64,
    pub excluded: usize,
}

fn evaluate(
    name: String,
    run: &RunFile,
    qrels: &Qrels,
    cutoff: usize,
    per_query: impl Fn(&[(String, f64)], &BTreeMap<String, u32>) -> f64,
) -> Result<MetricReport> {
    if cutoff == 0 {
        return Err(Error::Config("metric cutoff must be at least 1".into()));
    }
    let mut scores = BTreeMap::new();
    let mut excluded = 0;
    let mut common = 0;
    for (qid, ranking) in &run.rankings {
        let Some(judged) = qrels.query(qid) else {
            continue;
        };
        common += 1;
        if !judged.values().any(|&g| g > 0) {
            excluded += 1;
            continue;
        }
        scores.insert(qid.clone(), per_query(ranking, judged));
    }
    if common == 0 {
        return Err(Error::NoCommonQueries);
    }
    let mean = if scores.is_empty() {
        0.0
    } else {
        scores.values().sum::<f64>() / scores.len() as f64
    };
    Ok(MetricReport {
        name,
        per_query: scores,
        mean,
        excluded,
    })
}

fn dcg(grades: impl Iterator<Item = u32>) -> f64 {
    grades
        .enumerate()
        .map(|(i, g)| g as f64 / ((i + 2) as f64).log2())
        .sum()
}

pub fn ndcg_at(run: &RunFile, qrels: &Qrels, cutoff: usize) -> Result<MetricReport> {
    evaluate(
        format!("ndcg@{cutoff}"),
        run,
        qrels,
        cutoff,
        |ranking, judged| {
            let actual = dcg(ranking
                .iter()
                .take(cutoff)
                .map(|(d, _)| judged.get(d).copied().unwrap_or(0)));
            let mut ideal: Vec<u32> = judged.values().copied().collect();
            ideal.sort_unstable_by(|a, b| b.cmp(a));
            let best = dcg(ideal.into_iter().take(cutoff));
            actual / best
        },
    )
}

/// Fraction of the top `cutoff` slots holding a document with grade > 0;
/// missing slots count as non-relevant.
pub fn precision_at(run: &RunFile, qrels: &Qrels, cutoff: usize) -> Result<MetricReport> {
    evaluate(
        format!("P@{cutoff}"),
        run,
        qrels,
        cutoff,
        |ranking, judged| {
            let hits = ranking
                .iter()
                .take(cutoff)
                .filter(|(d, _)| judged.get(d).is_some_and(|&g| g > 0))
                .count();
            hits as f64 / cutoff as f64
        },
    )
}

/// Tab-separated `metric  qid  value` lines, per query then `all`.
pub fn format_reports(reports: &[MetricReport]) -> String {
    let mut out = String::new();
    for r in reports {
        for (qid, v) in &r.per_query {
            out.push_str(&format!("{}\t{}\t{:.4}\n", r.name, qid, v));
        }
        out.push_str(&format!("{}\tall\t{:.4}\n", r.name, r.mean));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_of(qid: &str, docs: &[&str]) -> RunFile {
        let mut run = RunFile::new("t");
        let n = docs.len();
        run.rankings.insert(
            qid.into(),
            docs.iter()
                .enumerate()
                .map(|(i, d)| (d.to_string(), (n - i) as f64))
                .collect(),
        );
        run
    }

    #[test]
    fn perfect_ranking_scores_one() {
        let mut q = Qrels::new();
        q.insert("1", "a", 2);
        q.insert("1", "b", 1);
        q.insert("1", "c", 0);
        let r = ndcg_at(&run_of("1", &["a", "b", "c"]), &q, 20).unwrap();
        assert!((r.mean - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_ndcg() {
        // grades at ranks 1..3 = [1, 0, 1]; a second relevant doc "d" unranked
        // DCG = 1 + 0 + 1/log2(4) = 1.5; IDCG = 1 + 1/log2(3)
        let mut q = Qrels::new();
        q.insert("1", "a", 1);
        q.insert("1", "c", 1);
        q.insert("1", "b", 0);
        let r = ndcg_at(&run_of("1", &["a", "b", "c"]), &q, 3).unwrap();
        let expected = 1.5 / (1.0 + 1.0 / 3f64.log2());
        assert!((r.mean - expected).abs() < 1e-15);
        assert!((r.mean - 0.9197).abs() < 1e-4);
    }

    #[test]
    fn ideal_uses_unretrieved_judgments() {
        let mut q = Qrels::new();
        q.insert("1", "a", 1);
        q.insert("1", "z", 1);
        let r = ndcg_at(&run_of("1", &["a", "b"]), &q, 2).unwrap();
        assert!((r.mean - 1.0 / (1.0 + 1.0 / 3f64.log2())).abs() < 1e-15);
    }

    #[test]
    fn irrelevant_run_scores_zero() {
        let mut q = Qrels::new();
        q.insert("1", "x", 1);
        let r = ndcg_at(&run_of("1", &["a", "b"]), &q, 10).unwrap();
        assert_eq!(r.mean, 0.0);
        let p = precision_at(&run_of("1", &["a", "b"]), &q, 10).unwrap();
        assert_eq!(p.mean, 0.0);
    }

    #[test]
    fn precision_counts_missing_slots_as_misses() {
        let mut q = Qrels::new();
        let docs: Vec<String> = (0..20).map(|i| format!("d{i:02}")).collect();
        for d in docs.iter().take(5) {
            q.insert("1", d.as_str(), 1);
        }
        let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
        assert_eq!(
            precision_at(&run_of("1", &refs), &q, 20).unwrap().mean,
            0.25
        );
        assert_eq!(
            precision_at(&run_of("1", &refs[..5]), &q, 20).unwrap().mean,
            0.25
        );
    }

    #[test]
    fn queries_without_relevant_docs_are_excluded() {
        let mut q = Qrels::new();
        q.insert("1", "a", 1);
        q.insert("2", "b", 0);
        let mut run = run_of("1", &["a"]);
        run.rankings.insert("2".into(), vec![("b".into(), 1.0)]);
        let r = ndcg_at(&run, &q, 5).unwrap();
        assert_eq!(r.excluded, 1);
        assert_eq!(r.per_query.len(), 1);
        assert_eq!(r.mean, 1.0);
    }

    #[test]
    fn disjoint_queries_error() {
        let mut q = Qrels::new();
        q.insert("1", "a", 1);
        assert!(matches!(
            ndcg_at(&run_of("2", &["a"]), &q, 5),
            Err(Error::NoCommonQueries)
        ));
        assert!(precision_at(&run_of("1", &["a"]), &q, 0).is_err());
    }
}

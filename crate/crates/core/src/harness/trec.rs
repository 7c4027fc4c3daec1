//! TREC qrels and run files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::candidates::CandidateList;
use crate::error::{Error, Result};

/// Relevance judgments: `qid -> doc_id -> grade`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, qid: impl Into<String>, doc_id: impl Into<String>, grade: u32) {
        self.judgments
            .entry(qid.into())
            .or_default()
            .insert(doc_id.into(), grade);
    }

    pub fn grade(&self, qid: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(qid)?.get(doc_id).copied()
    }

    pub fn query(&self, qid: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(qid)
    }

    pub fn qids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    /// Documents with grade > 0, in doc_id order.
    pub fn relevant(&self, qid: &str) -> Vec<&str> {
        self.judgments
            .get(qid)
            .map(|docs| {
                docs.iter()
                    .filter(|(_, &g)| g > 0)
                    .map(|(d, _)| d.as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// `qid 0 docid grade` lines.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut qrels = Qrels::new();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [qid, _iter, doc, grade] = fields[..] else {
                return Err(Error::parse(path, i + 1, "expected \"qid 0 docid grade\""));
            };
            let grade: i64 = grade
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad grade {grade:?}")))?;
            // negative grades (e.g. spam labels) are judged non-relevant
            qrels.insert(qid, doc, grade.max(0) as u32);
        }
        Ok(qrels)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text, path)
    }

    pub fn to_trec(&self) -> String {
        let mut out = String::new();
        for (qid, docs) in &self.judgments {
            for (doc, grade) in docs {
                writeln!(out, "{qid} 0 {doc} {grade}").expect("writing to a String cannot fail");
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_trec())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

/// Ranked `(doc_id, score)` lists per query, best first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFile {
    pub tag: String,
    pub rankings: BTreeMap<String, Vec<(String, f64)>>,
}

impl RunFile {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            rankings: BTreeMap::new(),
        }
    }

    pub fn from_candidates(
        tag: impl Into<String>,
        lists: impl IntoIterator<Item = CandidateList>,
    ) -> Self {
        let mut run = Self::new(tag);
        for list in lists {
            run.rankings.insert(list.qid, list.entries);
        }
        run
    }

    pub fn ranking(&self, qid: &str) -> Option<&[(String, f64)]> {
        self.rankings.get(qid).map(Vec::as_slice)
    }

    /// Sorts every list by descending score, ties by ascending doc_id.
    pub fn sort(&mut self) {
        for list in self.rankings.values_mut() {
            sort_ranking(list);
        }
    }

    pub fn truncate(&mut self, depth: usize) {
        for list in self.rankings.values_mut() {
            list.truncate(depth);
        }
    }

    /// `qid Q0 docid rank score tag` lines, ranks from 1.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut rows: BTreeMap<String, Vec<(usize, String, f64)>> = BTreeMap::new();
        let mut tag = String::new();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [qid, _q0, doc, rank, score, run_tag] = fields[..] else {
                return Err(Error::parse(
                    path,
                    i + 1,
                    "expected \"qid Q0 docid rank score tag\"",
                ));
            };
            let rank: usize = rank
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad rank {rank:?}")))?;
            let score: f64 = score
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad score {score:?}")))?;
            tag = run_tag.to_string();
            rows.entry(qid.to_string())
                .or_default()
                .push((rank, doc.to_string(), score));
        }
        let rankings = rows
            .into_iter()
            .map(|(qid, mut list)| {
                list.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
                (qid, list.into_iter().map(|(_, d, s)| (d, s)).collect())
            })
            .collect();
        Ok(Self { tag, rankings })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text, path)
    }

    pub fn to_trec(&self) -> String {
        let mut out = String::new();
        for (qid, list) in &self.rankings {
            for (rank, (doc, score)) in list.iter().enumerate() {
                writeln!(out, "{qid} Q0 {doc} {} {score:.9} {}", rank + 1, self.tag)
                    .expect("writing to a String cannot fail");
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_trec())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

pub(crate) fn sort_ranking(list: &mut [(String, f64)]) {
    list.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

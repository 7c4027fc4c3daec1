use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDoc {
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawQuery {
    pub qid: String,
    pub title: String,
}

fn open(path: &Path) -> Result<BufReader<std::fs::File>> {
    std::fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))
}

fn create(path: &Path) -> Result<BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

/// JSON lines with string fields `doc_id` and `text`. Blank lines are skipped.
pub fn read_corpus(path: &Path) -> Result<Vec<RawDoc>> {
    let mut docs = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDoc =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_corpus(path: &Path, docs: &[RawDoc]) -> Result<()> {
    let mut w = create(path)?;
    for doc in docs {
        let line =
            serde_json::to_string(doc).map_err(|e| Error::json("serializing document", e))?;
        writeln!(w, "{line}").map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    w.flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// `qid<TAB>title` lines.
pub fn read_queries(path: &Path) -> Result<Vec<RawQuery>> {
    let mut queries = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (qid, title) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected qid<TAB>title"))?;
        queries.push(RawQuery {
            qid: qid.trim().to_string(),
            title: title.to_string(),
        });
    }
    Ok(queries)
}

pub fn write_queries(path: &Path, queries: &[RawQuery]) -> Result<()> {
    let mut w = create(path)?;
    for q in queries {
        writeln!(w, "{}\t{}", q.qid, q.title)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    w.flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

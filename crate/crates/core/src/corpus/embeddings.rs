use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::{TermId, Vocabulary};
use crate::error::{Error, Result};

/// Range of the seeded uniform initialization for terms without a vector.
pub const OOV_INIT_RANGE: f64 = 0.1;

/// How vocabulary terms missing from the embeddings file get a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OovPolicy {
    /// Uniform in `[-0.1, 0.1]`, seeded per term so that a term's vector
    /// does not depend on the rest of the vocabulary.
    SeededUniform { seed: u64 },
}

impl Default for OovPolicy {
    fn default() -> Self {
        OovPolicy::SeededUniform { seed: 0 }
    }
}

/// One row per vocabulary term.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    data: Vec<f64>,
    oov_policy: OovPolicy,
    /// Rows copied from a file; the rest were initialized by `oov_policy`.
    from_file: usize,
}

impl EmbeddingTable {
    /// Every row drawn from `policy`.
    pub fn random(vocab: &Vocabulary, dim: usize, policy: OovPolicy) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        let mut data = Vec::with_capacity(vocab.len() * dim);
        for term in vocab.terms() {
            data.extend(oov_vector(term, dim, policy));
        }
        Ok(Self {
            dim,
            data,
            oov_policy: policy,
            from_file: 0,
        })
    }

    /// Reads word2vec text format: a `V D` header, then `word v1 ... vD` lines.
    pub fn load(path: &Path, vocab: &Vocabulary, policy: OovPolicy) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing header"))?
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut fields = header.split_whitespace();
        let (Some(_count), Some(dim), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(path, 1, "header must be \"<count> <dim>\""));
        };
        let dim: usize = dim
            .parse()
            .map_err(|_| Error::parse(path, 1, format!("bad dimension {dim:?}")))?;
        if dim == 0 {
            return Err(Error::parse(path, 1, "dimension must be positive"));
        }

        let mut rows: Vec<Option<Vec<f64>>> = vec![None; vocab.len()];
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-empty line has a field");
            let values = fields
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(path, lineno, format!("bad number: {e}")))?;
            if values.len() != dim {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {dim} values for {word:?}, found {}", values.len()),
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(path, lineno, "non-finite value"));
            }
            if let Some(id) = vocab.id(word) {
                if values.iter().all(|&v| v == 0.0) {
                    return Err(Error::ZeroNormEmbedding(word.to_string()));
                }
                rows[id.index()] = Some(values);
            }
        }

        Ok(Self::assemble(vocab, dim, rows, policy))
    }

    /// Builds a table from in-memory `(word, vector)` pairs; words outside
    /// the vocabulary are ignored.
    pub fn from_rows(
        vocab: &Vocabulary,
        rows: &[(String, Vec<f64>)],
        policy: OovPolicy,
    ) -> Result<Self> {
        let dim = rows
            .first()
            .map(|(_, v)| v.len())
            .ok_or_else(|| Error::Config("no embedding rows".into()))?;
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        let mut table: Vec<Option<Vec<f64>>> = vec![None; vocab.len()];
        for (word, values) in rows {
            if values.len() != dim {
                return Err(Error::Config(format!(
                    "expected {dim} values for {word:?}, found {}",
                    values.len()
                )));
            }
            if let Some(id) = vocab.id(word) {
                if values.iter().all(|&v| v == 0.0) {
                    return Err(Error::ZeroNormEmbedding(word.clone()));
                }
                table[id.index()] = Some(values.clone());
            }
        }
        Ok(Self::assemble(vocab, dim, table, policy))
    }

    fn assemble(
        vocab: &Vocabulary,
        dim: usize,
        rows: Vec<Option<Vec<f64>>>,
        policy: OovPolicy,
    ) -> Self {
        let from_file = rows.iter().filter(|r| r.is_some()).count();
        let mut data = Vec::with_capacity(vocab.len() * dim);
        for (term, row) in vocab.terms().iter().zip(rows) {
            match row {
                Some(v) => data.extend(v),
                None => data.extend(oov_vector(term, dim, policy)),
            }
        }
        Self {
            dim,
            data,
            oov_policy: policy,
            from_file,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn oov_policy(&self) -> OovPolicy {
        self.oov_policy
    }

    pub fn rows_from_file(&self) -> usize {
        self.from_file
    }

    pub fn row(&self, id: TermId) -> Result<&[f64]> {
        let start = id.index() * self.dim;
        self.data
            .get(start..start + self.dim)
            .ok_or(Error::UnknownTerm(id.index()))
    }
}

/// Writes word2vec text format.
pub fn write_word2vec(path: &Path, rows: &[(String, Vec<f64>)]) -> Result<()> {
    let dim = rows.first().map_or(0, |(_, v)| v.len());
    let mut out = format!("{} {dim}\n", rows.len());
    for (word, values) in rows {
        out.push_str(word);
        for v in values {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn oov_vector(term: &str, dim: usize, policy: OovPolicy) -> Vec<f64> {
    let OovPolicy::SeededUniform { seed } = policy;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(term.as_bytes()));
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.random_range(-OOV_INIT_RANGE..=OOV_INIT_RANGE))
            .collect();
        if v.iter().any(|&x| x != 0.0) {
            return v;
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use std::io::Write;

    fn vocab(texts: &[&str]) -> Vocabulary {
        Vocabulary::build(texts.iter().map(|t| tokenize(t)).collect::<Vec<_>>(), 1).unwrap()
    }

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn written_file_loads_back_exactly() {
        let v = vocab(&["a b"]);
        let rows = vec![
            ("a".to_string(), vec![0.1, -2.5e-7]),
            ("b".to_string(), vec![1.0 / 3.0, 4.0]),
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_word2vec(f.path(), &rows).unwrap();
        let loaded = EmbeddingTable::load(f.path(), &v, OovPolicy::default()).unwrap();
        assert_eq!(
            loaded,
            EmbeddingTable::from_rows(&v, &rows, OovPolicy::default()).unwrap()
        );
        assert_eq!(loaded.row(v.id("b").unwrap()).unwrap(), [1.0 / 3.0, 4.0]);
    }

    #[test]
    fn copies_rows_present_in_file() {
        let v = vocab(&["a b"]);
        let f = write("2 3\na 1 0 0\nzzz 0 1 0\n");
        let t = EmbeddingTable::load(f.path(), &v, OovPolicy::default()).unwrap();
        assert_eq!(t.row(v.id("a").unwrap()).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(t.rows_from_file(), 1);
        let b = t.row(v.id("b").unwrap()).unwrap();
        assert!(b.iter().all(|x| x.abs() <= OOV_INIT_RANGE) && b.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn missing_terms_are_deterministic_across_loads() {
        let f = write("1 4\na 1 2 3 4\n");
        let t1 = EmbeddingTable::load(f.path(), &vocab(&["a b"]), OovPolicy::default()).unwrap();
        let t2 =
            EmbeddingTable::load(f.path(), &vocab(&["a b c d"]), OovPolicy::default()).unwrap();
        let b1 = t1.row(TermId(1)).unwrap();
        let b2 = t2.row(TermId(1)).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn short_line_reports_its_line_number() {
        let v = vocab(&["a b"]);
        let f = write("2 3\na 1 0 0\nb 1 0\n");
        let err = EmbeddingTable::load(f.path(), &v, OovPolicy::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn zero_vector_is_rejected() {
        let v = vocab(&["a"]);
        let f = write("1 2\na 0 0\n");
        assert!(matches!(
            EmbeddingTable::load(f.path(), &v, OovPolicy::default()),
            Err(Error::ZeroNormEmbedding(_))
        ));
    }

    #[test]
    fn random_table_shape() {
        let v = vocab(&["a b c"]);
        let t = EmbeddingTable::random(&v, 300, OovPolicy::SeededUniform { seed: 9 }).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.dim(), 300);
        assert!(t.row(TermId(3)).is_err());
    }
}

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense vocabulary id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Retained terms with their document frequencies.
///
/// Ids are dense `0..len()` and assigned in lexicographic term order, so a
/// vocabulary is a pure function of the corpus and `min_count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<u32>,
    n_docs: usize,
    min_count: usize,
    #[serde(skip)]
    lookup: HashMap<String, TermId>,
}

impl Vocabulary {
    /// Keeps terms whose total occurrence count is at least `min_count`.
    /// Document frequency counts documents, not occurrences.
    pub fn build<D, T>(docs: D, min_count: usize) -> Result<Self>
    where
        D: IntoIterator<Item = T>,
        T: AsRef<[String]>,
    {
        if min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        let mut counts: BTreeMap<&str, (usize, u32)> = BTreeMap::new();
        let docs: Vec<T> = docs.into_iter().collect();
        for doc in &docs {
            let mut seen = HashSet::new();
            for tok in doc.as_ref() {
                let entry = counts.entry(tok.as_str()).or_insert((0, 0));
                entry.0 += 1;
                if seen.insert(tok.as_str()) {
                    entry.1 += 1;
                }
            }
        }
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let (terms, df): (Vec<String>, Vec<u32>) = counts
            .into_iter()
            .filter(|(_, (freq, _))| *freq >= min_count)
            .map(|(t, (_, df))| (t.to_string(), df))
            .unzip();
        if terms.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        let mut vocab = Self {
            terms,
            df,
            n_docs: docs.len(),
            min_count,
            lookup: HashMap::new(),
        };
        vocab.rebuild_lookup();
        Ok(vocab)
    }

    /// Restores the term lookup after deserialization.
    pub fn rebuild_lookup(&mut self) {
        self.lookup = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TermId(i as u32)))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.lookup.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> Option<&str> {
        self.terms.get(id.index()).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self, id: TermId) -> Result<u32> {
        self.df
            .get(id.index())
            .copied()
            .ok_or(Error::UnknownTerm(id.index()))
    }

    /// `ln((n_docs + 1) / (df + 1))`.
    pub fn idf(&self, id: TermId) -> Result<f64> {
        Ok(idf_from_counts(self.n_docs, self.df(id)? as usize))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::jsonio::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut vocab: Self = crate::jsonio::read_json(path)?;
        if vocab.terms.len() != vocab.df.len() {
            return Err(Error::parse(path, 1, "terms and df differ in length"));
        }
        vocab.rebuild_lookup();
        Ok(vocab)
    }

    /// Drops tokens not in the vocabulary.
    pub fn ids_of(&self, tokens: &[String]) -> Vec<TermId> {
        tokens.iter().filter_map(|t| self.id(t)).collect()
    }
}

/// Smoothed inverse document frequency, nonnegative and strictly decreasing in `df`.
pub fn idf_from_counts(n_docs: usize, df: usize) -> f64 {
    ((n_docs as f64 + 1.0) / (df as f64 + 1.0)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use proptest::prelude::*;

    fn toks(texts: &[&str]) -> Vec<Vec<String>> {
        texts.iter().map(|t| tokenize(t)).collect()
    }

    #[test]
    fn save_load_restores_lookup() {
        let v = Vocabulary::build(toks(&["graph pooling graph", "bm25 graph"]), 1).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        v.save(f.path()).unwrap();
        let back = Vocabulary::load(f.path()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.id("pooling"), v.id("pooling"));
    }

    #[test]
    fn min_count_two_keeps_only_frequent_terms() {
        let v = Vocabulary::build(toks(&["a a b", "a c"]), 2).unwrap();
        assert_eq!(v.terms(), ["a"]);
        let a = v.id("a").unwrap();
        assert_eq!(v.df(a).unwrap(), 2);
        assert_eq!(v.n_docs(), 2);
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let v = Vocabulary::build(toks(&["a a b", "a c"]), 1).unwrap();
        assert_eq!(v.terms(), ["a", "b", "c"]);
    }

    #[test]
    fn threshold_above_all_counts_errors() {
        let err = Vocabulary::build(toks(&["a a b", "a c"]), 10).unwrap_err();
        assert!(matches!(err, Error::EmptyVocabulary { min_count: 10 }));
    }

    #[test]
    fn empty_corpus_errors() {
        let err = Vocabulary::build(Vec::<Vec<String>>::new(), 1).unwrap_err();
        assert_eq!(err.to_string(), "empty corpus");
    }

    #[test]
    fn idf_values() {
        assert_eq!(idf_from_counts(7, 7), 0.0);
        assert!((idf_from_counts(2, 1) - 0.405_465_108_108_164_4).abs() < 1e-15);
        assert!((idf_from_counts(2, 0) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn unknown_term_idf_errors() {
        let v = Vocabulary::build(toks(&["a"]), 1).unwrap();
        assert!(matches!(v.idf(TermId(5)), Err(Error::UnknownTerm(5))));
    }

    #[test]
    fn serde_round_trip_restores_lookup() {
        let v = Vocabulary::build(toks(&["x y", "y z"]), 1).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let mut back: Vocabulary = serde_json::from_str(&json).unwrap();
        back.rebuild_lookup();
        assert_eq!(back, v);
    }

    proptest! {
        #[test]
        fn idf_strictly_decreasing_in_df(n in 1usize..10_000, df in 0usize..9_999) {
            prop_assume!(df < n);
            prop_assert!(idf_from_counts(n, df) > idf_from_counts(n, df + 1));
            prop_assert!(idf_from_counts(n, df + 1) >= 0.0);
        }

        #[test]
        fn retained_terms_meet_threshold(
            docs in prop::collection::vec(prop::collection::vec(0u8..12, 0..20), 1..8),
            min_count in 1usize..5,
        ) {
            let docs: Vec<Vec<String>> = docs
                .iter()
                .map(|d| d.iter().map(|t| format!("w{t}")).collect())
                .collect();
            match Vocabulary::build(&docs, min_count) {
                Ok(v) => {
                    for (i, term) in v.terms().iter().enumerate() {
                        let freq = docs.iter().flatten().filter(|t| *t == term).count();
                        prop_assert!(freq >= min_count);
                        prop_assert_eq!(v.id(term), Some(TermId(i as u32)));
                        prop_assert!(v.df(TermId(i as u32)).unwrap() as usize <= v.n_docs());
                    }
                }
                Err(Error::EmptyVocabulary { .. }) => {}
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}

/// Whitespace tokenizer with lowercasing and boundary-punctuation stripping.
///
/// Internal punctuation (`long-closed`, `u.s`) is kept. An optional stemmer
/// runs on each token after normalization; tokens it empties are dropped.
#[derive(Clone, Copy, Default)]
pub struct Tokenizer {
    stemmer: Option<fn(&str) -> String>,
}

impl std::fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tokenizer")
            .field("stemmer", &self.stemmer.is_some())
            .finish()
    }
}

impl Tokenizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_stemmer(stemmer: fn(&str) -> String) -> Self {
        Self {
            stemmer: Some(stemmer),
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split_whitespace()
            .filter_map(|piece| {
                let lower = piece.to_lowercase();
                let trimmed = lower.trim_matches(|c: char| !c.is_alphanumeric());
                if trimmed.is_empty() {
                    return None;
                }
                match self.stemmer {
                    Some(stem) => {
                        let s = stem(trimmed);
                        (!s.is_empty() && !s.contains(char::is_whitespace)).then_some(s)
                    }
                    None => Some(trimmed.to_string()),
                }
            })
            .collect()
    }
}

/// [`Tokenizer::tokenize`] with no stemmer.
pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::new().tokenize(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowercases_and_splits() {
        assert_eq!(tokenize("The EXPO Train"), ["the", "expo", "train"]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \t\n ").is_empty());
    }

    #[test]
    fn keeps_internal_hyphens_and_collapses_spaces() {
        assert_eq!(tokenize("long-closed  EXPO"), ["long-closed", "expo"]);
    }

    #[test]
    fn strips_boundary_punctuation_only() {
        assert_eq!(
            tokenize("(U.S.) \"trains\", -- rail's!"),
            ["u.s", "trains", "rail's"]
        );
    }

    #[test]
    fn stemmer_hook_applies() {
        fn strip_s(s: &str) -> String {
            s.strip_suffix('s').unwrap_or(s).to_string()
        }
        let t = Tokenizer::with_stemmer(strip_s);
        assert_eq!(t.tokenize("Trains runs s"), ["train", "run"]);
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(text in "\\PC{0,80}") {
            let once = tokenize(&text);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(&once, &twice);
            for tok in &once {
                prop_assert!(!tok.is_empty());
                prop_assert!(!tok.contains(char::is_whitespace));
            }
        }
    }
}

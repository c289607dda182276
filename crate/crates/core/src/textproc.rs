//! Text normalization: HTML unescaping, whitespace tokenization, punctuation
//! stripping, lowercasing and stopword removal.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use thiserror::Error;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Error)]
pub enum TextError {
    #[error("stopword file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("cannot read stopword file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Lowercased set of terms removed during preprocessing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordSet(HashSet<String>);

impl StopwordSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The packaged English list.
    pub fn english() -> Self {
        Self::from_lines(DEFAULT_STOPWORDS)
    }

    pub fn from_lines(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<S> for StopwordSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.as_ref().trim().to_lowercase()).filter(|s| !s.is_empty()).collect())
    }
}

/// Reads a stopword file: UTF-8, one term per line.
pub fn load_stopwords(path: &Path) -> Result<StopwordSet, TextError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            TextError::FileNotFound(path.to_path_buf())
        } else {
            TextError::Io { path: path.to_path_buf(), source }
        }
    })?;
    Ok(StopwordSet::from_lines(&text))
}

/// Splits normalized text into candidate tokens.
pub trait Tokenizer {
    fn tokenize<'a>(&self, text: &'a str) -> Vec<&'a str>;
}

/// Whitespace splitting; hyphenated words stay whole.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize<'a>(&self, text: &'a str) -> Vec<&'a str> {
        text.split_whitespace().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub doc_id: String,
    pub tokens: Vec<String>,
    /// Tokens surviving punctuation stripping, before stopword removal.
    pub n_raw_tokens: usize,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Decodes HTML entities until the text stops changing, so double-escaped
/// input (`&amp;amp;`) is fully decoded in one pass.
fn unescape_html(raw: &str) -> String {
    let mut text = raw.to_string();
    for _ in 0..8 {
        let next = html_escape::decode_html_entities(&text).into_owned();
        if next == text {
            break;
        }
        text = next;
    }
    text
}

/// Lowercases and trims non-alphanumeric characters from both ends.
/// Returns `None` when nothing is left.
fn normalize_token(token: &str) -> Option<String> {
    let lower = token.to_lowercase();
    let trimmed = lower.trim_matches(|c: char| !c.is_alphanumeric());
    (!trimmed.is_empty()).then(|| trimmed.to_string())
}

pub fn preprocess(doc_id: &str, raw: &str, stopwords: &StopwordSet) -> TokenSequence {
    preprocess_with(&WhitespaceTokenizer, doc_id, raw, stopwords)
}

pub fn preprocess_with<K: Tokenizer>(tokenizer: &K, doc_id: &str, raw: &str, stopwords: &StopwordSet) -> TokenSequence {
    let text = unescape_html(raw);
    let words: Vec<String> = tokenizer.tokenize(&text).into_iter().filter_map(normalize_token).collect();
    let n_raw_tokens = words.len();
    let tokens = words.into_iter().filter(|w| !stopwords.contains(w)).collect();
    TokenSequence { doc_id: doc_id.to_string(), tokens, n_raw_tokens }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(raw: &str, stop: &StopwordSet) -> Vec<String> {
        preprocess("d", raw, stop).tokens
    }

    #[test]
    fn strips_punctuation_and_stopwords() {
        let stop: StopwordSet = ["i"].into_iter().collect();
        assert_eq!(toks("I love cats!", &stop), ["love", "cats"]);
    }

    #[test]
    fn unescapes_before_splitting() {
        assert_eq!(toks("Tom &amp; Jerry", &StopwordSet::empty()), ["tom", "jerry"]);
        assert_eq!(toks("x&amp;amp;y", &StopwordSet::empty()), ["x&y"]);
    }

    #[test]
    fn empty_input() {
        let seq = preprocess("d", "", &StopwordSet::english());
        assert!(seq.is_empty());
        assert_eq!(seq.n_raw_tokens, 0);
    }

    #[test]
    fn keeps_internal_apostrophes_and_hyphens() {
        assert_eq!(
            toks("'Don't' stop-motion... ok?!", &StopwordSet::empty()),
            ["don't", "stop-motion", "ok"]
        );
    }

    #[test]
    fn raw_count_is_before_stopword_removal() {
        let seq = preprocess("d", "The sun is bright --", &StopwordSet::english());
        assert_eq!(seq.n_raw_tokens, 4);
        assert_eq!(seq.tokens, ["sun", "bright"]);
    }

    #[test]
    fn stopword_file_lowercased_and_deduplicated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stop.txt");
        std::fs::write(&path, "The\na\nthe\n").unwrap();
        let set = load_stopwords(&path).unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.contains("the") && set.contains("a"));

        std::fs::write(&path, "").unwrap();
        assert!(load_stopwords(&path).unwrap().is_empty());

        assert!(matches!(load_stopwords(&dir.path().join("nope.txt")), Err(TextError::FileNotFound(_))));
    }

    #[test]
    fn packaged_list_is_loaded() {
        let set = StopwordSet::english();
        assert!(set.contains("the") && set.contains("don't"));
        assert!(!set.contains("love"));
    }

    proptest! {
        #[test]
        fn idempotent(raw in "[a-zA-Z0-9 &;#!?.,'\\-\"İ\t\n]{0,60}") {
            let stop = StopwordSet::english();
            let once = preprocess("d", &raw, &stop);
            let twice = preprocess("d", &once.tokens.join(" "), &stop);
            prop_assert_eq!(&once.tokens, &twice.tokens);
        }

        #[test]
        fn output_is_clean_and_no_longer_than_input(raw in "[a-zA-Z &;!?.,'\\-]{0,60}") {
            let seq = preprocess("d", &raw, &StopwordSet::english());
            prop_assert!(seq.tokens.len() <= raw.split_whitespace().count());
            for t in &seq.tokens {
                prop_assert!(!t.chars().any(char::is_whitespace));
                prop_assert!(t.chars().any(char::is_alphanumeric));
                prop_assert_eq!(t.to_lowercase(), t.clone());
            }
        }

        #[test]
        fn stopword_removal_preserves_order(raw in "[a-e ]{0,40}") {
            let stop: StopwordSet = ["a", "c"].into_iter().collect();
            let all = preprocess("d", &raw, &StopwordSet::empty()).tokens;
            let kept = preprocess("d", &raw, &stop).tokens;
            let expected: Vec<_> = all.into_iter().filter(|t| t != "a" && t != "c").collect();
            prop_assert_eq!(kept, expected);
        }
    }
}

//! Word-emotion lexicons.
//!
//! Three tab-separated layouts are understood:
//!
//! * single-dimension: `term<TAB>score`, the dimension named by the caller
//! * multi-dimension (long): `term<TAB>dimension<TAB>score`
//! * wide: a header row `word<TAB>dim1<TAB>dim2...` followed by one score per dimension
//!
//! Raw scores must lie in `[0, 1]`. Lines starting with `#` and blank lines are
//! ignored; LF and CRLF line endings are both accepted.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::scalar::Scalar;

/// Dimensions that are rescaled to `[-1, 1]` when rescaling is left on auto.
pub const VAD_DIMENSIONS: [&str; 3] = ["valence", "arousal", "dominance"];

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed lexicon line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("score for '{term}' on line {line} is outside [0, 1]")]
    ScoreOutOfRange { term: String, line: usize },
    #[error("duplicate entry for term '{term}', dimension '{dimension}'")]
    DuplicateEntry { term: String, dimension: String },
    #[error("unknown dimension '{0}'")]
    UnknownDimension(String),
    #[error("lexicon declares no dimensions")]
    NoDimensions,
    #[error("neutral band half-width must be non-negative")]
    NegativeHalfWidth,
}

/// On-disk layout of a lexicon file.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "layout", rename_all = "kebab-case")]
pub enum LexiconFormat {
    Single { dimension: String },
    Multi,
    Wide,
}

/// Transformation applied to raw `[0, 1]` scores at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rescale {
    #[default]
    None,
    /// `v -> 2v - 1`, so the range becomes `[-1, 1]`.
    ZeroOneToSignedUnit,
}

impl Rescale {
    fn apply<T: Scalar>(self, raw: T) -> T {
        match self {
            Rescale::None => raw,
            Rescale::ZeroOneToSignedUnit => (T::one() + T::one()) * raw - T::one(),
        }
    }

    fn invert<T: Scalar>(self, stored: T) -> T {
        match self {
            Rescale::None => stored,
            Rescale::ZeroOneToSignedUnit => (stored + T::one()) / (T::one() + T::one()),
        }
    }

    fn range<T: Scalar>(self) -> (T, T) {
        match self {
            Rescale::None => (T::zero(), T::one()),
            Rescale::ZeroOneToSignedUnit => (-T::one(), T::one()),
        }
    }
}

/// Scores within `half_width` of `center` count as neutral and are excluded
/// from emotion arcs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeutralBand<T> {
    center: T,
    half_width: T,
}

impl<T: Scalar> NeutralBand<T> {
    pub fn new(center: T, half_width: T) -> Result<Self, LexiconError> {
        if half_width < T::zero() {
            return Err(LexiconError::NegativeHalfWidth);
        }
        Ok(Self { center, half_width })
    }

    pub fn center(&self) -> T {
        self.center
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn is_neutral(&self, score: T) -> bool {
        (score - self.center).abs() <= self.half_width
    }
}

/// An immutable term → per-dimension score table.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon<T> {
    name: String,
    dimension_names: Vec<String>,
    entries: BTreeMap<String, Vec<Option<T>>>,
    rescale: Rescale,
    skipped_multiword: usize,
}

impl<T: Scalar> Lexicon<T> {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension_names(&self) -> &[String] {
        &self.dimension_names
    }

    pub fn dimension_index(&self, dimension: &str) -> Option<usize> {
        self.dimension_names.iter().position(|d| d == dimension)
    }

    pub fn rescale(&self) -> Rescale {
        self.rescale
    }

    /// Closed interval every stored score lies in.
    pub fn score_range(&self) -> (T, T) {
        self.rescale.range()
    }

    /// Number of distinct terms.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Rows dropped at load time because the term contained whitespace.
    pub fn skipped_multiword(&self) -> usize {
        self.skipped_multiword
    }

    /// Looks up `token` on `dimension`. `Ok(None)` means the token carries no
    /// score for that dimension.
    pub fn score(&self, token: &str, dimension: &str) -> Result<Option<T>, LexiconError> {
        let idx = self
            .dimension_index(dimension)
            .ok_or_else(|| LexiconError::UnknownDimension(dimension.to_string()))?;
        Ok(self.score_at(token, idx))
    }

    /// Lookup by dimension index, as returned by [`Lexicon::dimension_index`].
    pub fn score_at(&self, token: &str, dimension_idx: usize) -> Option<T> {
        self.entries.get(token).and_then(|scores| scores.get(dimension_idx).copied().flatten())
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Serializes to the multi-dimension layout in the raw `[0, 1]` domain,
    /// sorted by term then declared dimension order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (term, scores) in &self.entries {
            for (dim, score) in self.dimension_names.iter().zip(scores) {
                if let Some(v) = score {
                    let raw = self.rescale.invert(*v);
                    let _ = writeln!(out, "{term}\t{dim}\t{}", raw.to_f64_lossy());
                }
            }
        }
        out
    }
}

/// Reads a lexicon file from disk. The lexicon is named after the file stem.
pub fn load_lexicon<T: Scalar>(
    path: &Path,
    format: &LexiconFormat,
    rescale: Rescale,
) -> Result<Lexicon<T>, LexiconError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            LexiconError::FileNotFound(path.to_path_buf())
        } else {
            LexiconError::Io { path: path.to_path_buf(), source }
        }
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "lexicon".to_string());
    parse_lexicon(&name, &text, format, rescale)
}

struct Builder<T> {
    dims: Vec<String>,
    entries: BTreeMap<String, Vec<Option<T>>>,
    rescale: Rescale,
    skipped_multiword: usize,
}

impl<T: Scalar> Builder<T> {
    fn dim_index(&mut self, dim: &str) -> usize {
        if let Some(i) = self.dims.iter().position(|d| d == dim) {
            return i;
        }
        self.dims.push(dim.to_string());
        for scores in self.entries.values_mut() {
            scores.push(None);
        }
        self.dims.len() - 1
    }

    fn insert(&mut self, term: &str, dim_idx: usize, raw: &str, line: usize) -> Result<(), LexiconError> {
        let value: f64 = raw.trim().parse().map_err(|_| LexiconError::MalformedLine {
            line,
            reason: format!("score '{}' is not a number", raw.trim()),
        })?;
        if !value.is_finite() {
            return Err(LexiconError::MalformedLine { line, reason: "score is not finite".into() });
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(LexiconError::ScoreOutOfRange { term: term.to_string(), line });
        }
        let score = self.rescale.apply(T::of(value));
        let width = self.dims.len();
        let slot = &mut self
            .entries
            .entry(term.to_string())
            .or_insert_with(|| vec![None; width])[dim_idx];
        if slot.is_some() {
            return Err(LexiconError::DuplicateEntry {
                term: term.to_string(),
                dimension: self.dims[dim_idx].clone(),
            });
        }
        *slot = Some(score);
        Ok(())
    }
}

/// Normalizes a term field. `Ok(None)` means a multi-word term to skip.
fn clean_term(field: &str, line: usize) -> Result<Option<String>, LexiconError> {
    let term = field.trim();
    if term.is_empty() {
        return Err(LexiconError::MalformedLine { line, reason: "empty term".into() });
    }
    if term.split_whitespace().nth(1).is_some() {
        return Ok(None);
    }
    Ok(Some(term.to_lowercase()))
}

/// Parses lexicon text already in memory.
pub fn parse_lexicon<T: Scalar>(
    name: &str,
    text: &str,
    format: &LexiconFormat,
    rescale: Rescale,
) -> Result<Lexicon<T>, LexiconError> {
    let mut b = Builder { dims: Vec::new(), entries: BTreeMap::new(), rescale, skipped_multiword: 0 };
    let mut wide_width: Option<usize> = None;

    if let LexiconFormat::Single { dimension } = format {
        let dim = dimension.trim().to_lowercase();
        if dim.is_empty() {
            return Err(LexiconError::NoDimensions);
        }
        b.dims.push(dim);
    }

    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let raw_line = raw_line.strip_prefix('\u{feff}').unwrap_or(raw_line);
        if raw_line.trim().is_empty() || raw_line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw_line.split('\t').collect();
        match format {
            LexiconFormat::Single { .. } => {
                if fields.len() != 2 {
                    return Err(LexiconError::MalformedLine { line, reason: format!("expected 2 fields, found {}", fields.len()) });
                }
                match clean_term(fields[0], line)? {
                    Some(term) => b.insert(&term, 0, fields[1], line)?,
                    None => b.skipped_multiword += 1,
                }
            }
            LexiconFormat::Multi => {
                if fields.len() != 3 {
                    return Err(LexiconError::MalformedLine { line, reason: format!("expected 3 fields, found {}", fields.len()) });
                }
                let dim = fields[1].trim().to_lowercase();
                if dim.is_empty() {
                    return Err(LexiconError::MalformedLine { line, reason: "empty dimension".into() });
                }
                match clean_term(fields[0], line)? {
                    Some(term) => {
                        let idx = b.dim_index(&dim);
                        b.insert(&term, idx, fields[2], line)?;
                    }
                    None => b.skipped_multiword += 1,
                }
            }
            LexiconFormat::Wide => match wide_width {
                None => {
                    if fields.len() < 2 {
                        return Err(LexiconError::MalformedLine { line, reason: "header needs at least one dimension column".into() });
                    }
                    for f in &fields[1..] {
                        let dim = f.trim().to_lowercase();
                        if dim.is_empty() || b.dims.contains(&dim) {
                            return Err(LexiconError::MalformedLine { line, reason: format!("bad dimension header '{f}'") });
                        }
                        b.dims.push(dim);
                    }
                    wide_width = Some(fields.len());
                }
                Some(width) => {
                    if fields.len() != width {
                        return Err(LexiconError::MalformedLine { line, reason: format!("expected {width} fields, found {}", fields.len()) });
                    }
                    match clean_term(fields[0], line)? {
                        Some(term) => {
                            for (idx, raw) in fields[1..].iter().enumerate() {
                                b.insert(&term, idx, raw, line)?;
                            }
                        }
                        None => b.skipped_multiword += 1,
                    }
                }
            },
        }
    }

    if b.dims.is_empty() {
        return Err(LexiconError::NoDimensions);
    }
    Ok(Lexicon {
        name: name.to_string(),
        dimension_names: b.dims,
        entries: b.entries,
        rescale,
        skipped_multiword: b.skipped_multiword,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(text: &str, rescale: Rescale) -> Result<Lexicon<f64>, LexiconError> {
        parse_lexicon("t", text, &LexiconFormat::Single { dimension: "valence".into() }, rescale)
    }

    #[test]
    fn rescale_maps_to_signed_unit() {
        let lex = single("happy\t0.9\ncalm\t0.5\n", Rescale::ZeroOneToSignedUnit).unwrap();
        assert!((lex.score("happy", "valence").unwrap().unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(lex.score("calm", "valence").unwrap(), Some(0.0));
        assert_eq!(lex.score_range(), (-1.0, 1.0));
    }

    #[test]
    fn out_of_range_score_rejected() {
        let err = single("happy\t1.2\n", Rescale::ZeroOneToSignedUnit).unwrap_err();
        assert!(matches!(err, LexiconError::ScoreOutOfRange { ref term, line: 1 } if term == "happy"));
    }

    #[test]
    fn lookups() {
        let lex = single("happy\t0.9\n", Rescale::ZeroOneToSignedUnit).unwrap();
        assert_eq!(lex.score("zzzz", "valence").unwrap(), None);
        assert!(matches!(lex.score("happy", "arousal"), Err(LexiconError::UnknownDimension(_))));
    }

    #[test]
    fn comments_blank_lines_and_crlf() {
        let lex = single("# header\r\n\r\nHappy\t0.9\r\nsad\t0.1\r\n", Rescale::None).unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.score("happy", "valence").unwrap(), Some(0.9));
    }

    #[test]
    fn duplicates_are_errors() {
        let err = single("happy\t0.9\nHAPPY\t0.8\n", Rescale::None).unwrap_err();
        assert!(matches!(err, LexiconError::DuplicateEntry { .. }));
        let err = parse_lexicon::<f64>("t", "a\tanger\t0.5\na\tanger\t0.6\n", &LexiconFormat::Multi, Rescale::None)
            .unwrap_err();
        assert!(matches!(err, LexiconError::DuplicateEntry { ref dimension, .. } if dimension == "anger"));
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let err = single("happy\t0.9\nbroken\n", Rescale::None).unwrap_err();
        assert!(matches!(err, LexiconError::MalformedLine { line: 2, .. }));
        let err = single("happy\tlots\n", Rescale::None).unwrap_err();
        assert!(matches!(err, LexiconError::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn multi_dimension_layout() {
        let text = "abandon\tfear\t0.531\nabandon\tsadness\t0.703\nabhor\tanger\t0.828\n";
        let lex: Lexicon<f64> = parse_lexicon("eil", text, &LexiconFormat::Multi, Rescale::None).unwrap();
        assert_eq!(lex.dimension_names(), &["fear", "sadness", "anger"]);
        assert_eq!(lex.score("abandon", "anger").unwrap(), None);
        assert_eq!(lex.score("abhor", "anger").unwrap(), Some(0.828));
    }

    #[test]
    fn wide_layout_with_multiword_skip() {
        let text = "Word\tValence\tArousal\tDominance\naaaaaaah\t0.479\t0.606\t0.291\na cappella\t0.5\t0.5\t0.5\n";
        let lex: Lexicon<f64> = parse_lexicon("vad", text, &LexiconFormat::Wide, Rescale::None).unwrap();
        assert_eq!(lex.dimension_names(), &["valence", "arousal", "dominance"]);
        assert_eq!(lex.score("aaaaaaah", "arousal").unwrap(), Some(0.606));
        assert_eq!(lex.skipped_multiword(), 1);
        assert_eq!(lex.len(), 1);
    }

    #[test]
    fn missing_file() {
        let err = load_lexicon::<f64>(Path::new("/nonexistent/lex.tsv"), &LexiconFormat::Multi, Rescale::None)
            .unwrap_err();
        assert!(matches!(err, LexiconError::FileNotFound(_)));
    }

    #[test]
    fn neutral_band() {
        let band = NeutralBand::new(0.0, 0.0).unwrap();
        assert!(band.is_neutral(0.0));
        assert!(!band.is_neutral(1e-9));
        let band = NeutralBand::new(0.0, 0.1).unwrap();
        assert!(band.is_neutral(-0.1));
        assert!(!band.is_neutral(0.11));
        assert!(NeutralBand::new(0.0, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn rescale_is_order_preserving(u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
            prop_assume!(u < v);
            let r = Rescale::ZeroOneToSignedUnit;
            prop_assert!(r.apply(u) < r.apply(v));
        }

        #[test]
        fn tsv_round_trip(rows in proptest::collection::btree_map("[a-z]{1,8}", (0usize..3, 0.0f64..=1.0), 1..30)) {
            let dims = ["anger", "fear", "joy"];
            let text: String = rows.iter().map(|(t, (d, v))| format!("{t}\t{}\t{v}\n", dims[*d])).collect();
            let lex: Lexicon<f64> = parse_lexicon("x", &text, &LexiconFormat::Multi, Rescale::None).unwrap();
            let again: Lexicon<f64> = parse_lexicon("x", &lex.to_tsv(), &LexiconFormat::Multi, Rescale::None).unwrap();
            let before: Vec<_> = lex.terms().flat_map(|t| lex.dimension_names().iter().map(move |d| (t, d))).map(|(t, d)| (t.to_string(), d.clone(), lex.score(t, d).unwrap())).collect();
            let after: Vec<_> = before.iter().map(|(t, d, _)| (t.clone(), d.clone(), again.score(t, d).unwrap())).collect();
            prop_assert_eq!(before, after);
            prop_assert_eq!(lex.len(), again.len());
        }
    }
}

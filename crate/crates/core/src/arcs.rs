//! Emotion arcs: sliding-window means over a document's emotion words, or
//! externally scored windows ingested as-is.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::lexicon::{Lexicon, LexiconError, NeutralBand};
use crate::scalar::Scalar;
use crate::textproc::TokenSequence;

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_STEP: usize = 1;

fn at_line(line: &Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

#[derive(Debug, Error)]
pub enum ArcError {
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("window and step must both be at least 1 (window {window}, step {step})")]
    InvalidWindow { window: usize, step: usize },
    #[error("document '{doc_id}' has {have} emotion words, needs at least {need}")]
    InsufficientEmotionWords { doc_id: String, have: usize, need: usize },
    #[error("document '{doc_id}': window index {missing} is missing")]
    NonContiguousIndices { doc_id: String, missing: usize },
    #[error("document '{doc_id}': window index {index} appears more than once{}", at_line(.line))]
    DuplicateIndex { doc_id: String, index: usize, line: Option<usize> },
    #[error("document '{doc_id}': score for window {index} is outside [0, 1]{}", at_line(.line))]
    ScoreOutOfRange { doc_id: String, index: usize, line: Option<usize> },
    #[error("window-score file {path}: {reason}{}", at_line(.line))]
    MalformedScores { path: PathBuf, line: Option<usize>, reason: String },
}

/// Scores of the non-neutral emotion words of one document, in text order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSequence<T> {
    pub doc_id: String,
    pub dimension: String,
    pub scores: Vec<T>,
    /// Token count of the sequence the scores were drawn from.
    pub n_tokens: usize,
}

impl<T> ScoredSequence<T> {
    /// Fraction of tokens that are emotion words; 0 for an empty document.
    pub fn coverage(&self) -> f64 {
        if self.n_tokens == 0 {
            0.0
        } else {
            self.scores.len() as f64 / self.n_tokens as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmotionArc<T> {
    pub doc_id: String,
    pub dimension: String,
    pub points: Vec<T>,
    pub window: usize,
    pub step: usize,
}

impl<T: Scalar> EmotionArc<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Number of full windows over `n_scores` values; zero when `n_scores < window`.
pub fn window_count(n_scores: usize, window: usize, step: usize) -> usize {
    if window == 0 || step == 0 || n_scores < window {
        0
    } else {
        (n_scores - window) / step + 1
    }
}

/// Keeps, in order, the scores of tokens present in the lexicon on
/// `dimension` and outside `band` (when one is given).
pub fn emotion_word_sequence<T: Scalar>(
    tokens: &TokenSequence,
    lexicon: &Lexicon<T>,
    dimension: &str,
    band: Option<&NeutralBand<T>>,
) -> Result<ScoredSequence<T>, ArcError> {
    let idx = lexicon
        .dimension_index(dimension)
        .ok_or_else(|| LexiconError::UnknownDimension(dimension.to_string()))?;
    let scores = tokens
        .tokens
        .iter()
        .filter_map(|t| lexicon.score_at(t, idx))
        .filter(|&s| band.is_none_or(|b| !b.is_neutral(s)))
        .collect();
    Ok(ScoredSequence {
        doc_id: tokens.doc_id.clone(),
        dimension: dimension.to_string(),
        scores,
        n_tokens: tokens.len(),
    })
}

/// Averages each full window of `window` scores, advancing by `step`.
/// Partial tail windows are dropped.
pub fn build_arc<T: Scalar>(seq: &ScoredSequence<T>, window: usize, step: usize) -> Result<EmotionArc<T>, ArcError> {
    if window == 0 || step == 0 {
        return Err(ArcError::InvalidWindow { window, step });
    }
    if seq.scores.len() < window {
        return Err(ArcError::InsufficientEmotionWords {
            doc_id: seq.doc_id.clone(),
            have: seq.scores.len(),
            need: window,
        });
    }
    let width = T::from_count(window);
    let points = (0..window_count(seq.scores.len(), window, step))
        .map(|i| {
            let start = i * step;
            let sum = seq.scores[start..start + window].iter().fold(T::zero(), |acc, &v| acc + v);
            sum / width
        })
        .collect();
    Ok(EmotionArc {
        doc_id: seq.doc_id.clone(),
        dimension: seq.dimension.clone(),
        points,
        window,
        step,
    })
}

/// One externally scored window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowScore<T> {
    pub doc_id: String,
    pub window_index: usize,
    pub score: T,
    /// Source line, when read from a file.
    pub line: Option<usize>,
}

/// Groups window scores into one arc per document, documents in order of
/// first appearance, points in window-index order.
pub fn arcs_from_window_scores<T: Scalar>(
    records: &[WindowScore<T>],
    dimension: &str,
    window: usize,
    step: usize,
) -> Result<Vec<EmotionArc<T>>, ArcError> {
    if window == 0 || step == 0 {
        return Err(ArcError::InvalidWindow { window, step });
    }
    let mut order: Vec<&str> = Vec::new();
    let mut by_doc: HashMap<&str, Vec<&WindowScore<T>>> = HashMap::new();
    for r in records {
        if r.score < T::zero() || r.score > T::one() {
            return Err(ArcError::ScoreOutOfRange { doc_id: r.doc_id.clone(), index: r.window_index, line: r.line });
        }
        by_doc
            .entry(&r.doc_id)
            .or_insert_with(|| {
                order.push(&r.doc_id);
                Vec::new()
            })
            .push(r);
    }

    order
        .into_iter()
        .map(|doc_id| {
            let mut rows = by_doc.remove(doc_id).unwrap_or_default();
            rows.sort_by_key(|r| r.window_index);
            for pair in rows.windows(2) {
                if pair[0].window_index == pair[1].window_index {
                    return Err(ArcError::DuplicateIndex {
                        doc_id: doc_id.to_string(),
                        index: pair[1].window_index,
                        line: pair[1].line,
                    });
                }
            }
            if let Some(missing) = rows.iter().enumerate().find(|(i, r)| r.window_index != *i).map(|(i, _)| i) {
                return Err(ArcError::NonContiguousIndices { doc_id: doc_id.to_string(), missing });
            }
            Ok(EmotionArc {
                doc_id: doc_id.to_string(),
                dimension: dimension.to_string(),
                points: rows.iter().map(|r| r.score).collect(),
                window,
                step,
            })
        })
        .collect()
}

/// Reads a `doc_id,window_index,score` CSV.
pub fn read_window_scores<T: Scalar>(path: &Path) -> Result<Vec<WindowScore<T>>, ArcError> {
    let malformed = |line: Option<usize>, reason: String| ArcError::MalformedScores { path: path.to_path_buf(), line, reason };
    let mut reader = csv::Reader::from_path(path).map_err(|e| malformed(None, e.to_string()))?;
    let headers = reader.headers().map_err(|e| malformed(Some(1), e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| malformed(Some(1), format!("missing column '{name}'")))
    };
    let (id_col, idx_col, score_col) = (col("doc_id")?, col("window_index")?, col("score")?);

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(e.position().map(|p| p.line() as usize), e.to_string()))?;
        let line = record.position().map(|p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let window_index = field(idx_col)
            .parse::<usize>()
            .map_err(|_| malformed(line, format!("bad window_index '{}'", field(idx_col))))?;
        let score = field(score_col)
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| malformed(line, format!("bad score '{}'", field(score_col))))?;
        out.push(WindowScore { doc_id: field(id_col).to_string(), window_index, score: T::of(score), line });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{parse_lexicon, LexiconFormat, Rescale};
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn seq(scores: Vec<f64>) -> ScoredSequence<f64> {
        ScoredSequence { doc_id: "d".into(), dimension: "valence".into(), n_tokens: scores.len(), scores }
    }

    fn tokens(words: &[&str]) -> TokenSequence {
        TokenSequence { doc_id: "d".into(), tokens: words.iter().map(|s| s.to_string()).collect(), n_raw_tokens: words.len() }
    }

    fn lexicon(text: &str) -> Lexicon<f64> {
        parse_lexicon("l", text, &LexiconFormat::Single { dimension: "valence".into() }, Rescale::None).unwrap()
    }

    #[test]
    fn unknown_tokens_are_skipped() {
        let lex = lexicon("love\t0.9\ncats\t0.6\n");
        let s = emotion_word_sequence(&tokens(&["love", "cats", "the-unknown-word"]), &lex, "valence", None).unwrap();
        assert_eq!(s.scores, [0.9, 0.6]);
        assert!((s.coverage() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn neutral_scores_excluded_and_repeats_kept() {
        let lex = parse_lexicon::<f64>(
            "l",
            "calm\t0.5\nsad\t0.15\n",
            &LexiconFormat::Single { dimension: "valence".into() },
            Rescale::ZeroOneToSignedUnit,
        )
        .unwrap();
        let band = NeutralBand::new(0.0, 0.0).unwrap();
        let s = emotion_word_sequence(&tokens(&["calm"]), &lex, "valence", Some(&band)).unwrap();
        assert!(s.scores.is_empty());
        let s = emotion_word_sequence(&tokens(&["sad", "sad", "sad"]), &lex, "valence", Some(&band)).unwrap();
        assert_eq!(s.scores.len(), 3);
        assert!(s.scores.iter().all(|&v| (v + 0.7).abs() < 1e-15));
    }

    #[test]
    fn unknown_dimension() {
        let lex = lexicon("love\t0.9\n");
        assert!(matches!(
            emotion_word_sequence(&tokens(&["love"]), &lex, "arousal", None),
            Err(ArcError::Lexicon(LexiconError::UnknownDimension(_)))
        ));
    }

    #[test]
    fn window_means_hand_computed() {
        type Q = Ratio<i64>;
        let scores: Vec<Q> = [2, 4, 6, 8, 10, 0].iter().map(|&n| Q::new(n, 10)).collect();
        let s = ScoredSequence { doc_id: "d".into(), dimension: "v".into(), n_tokens: 6, scores };
        let arc = build_arc(&s, 5, 1).unwrap();
        assert_eq!(arc.points, [Q::new(6, 10), Q::new(56, 100)]);

        let arc = build_arc(&seq(vec![0.5; 5]), 5, 1).unwrap();
        assert_eq!(arc.points, [0.5]);
    }

    #[test]
    fn too_few_emotion_words() {
        let err = build_arc(&seq(vec![0.1, 0.2, 0.3, 0.4]), 5, 1).unwrap_err();
        assert!(matches!(err, ArcError::InsufficientEmotionWords { have: 4, need: 5, .. }));
        assert!(matches!(build_arc(&seq(vec![0.1]), 0, 1), Err(ArcError::InvalidWindow { .. })));
    }

    fn ws(doc: &str, idx: usize, score: f64) -> WindowScore<f64> {
        WindowScore { doc_id: doc.into(), window_index: idx, score, line: None }
    }

    #[test]
    fn window_score_ingestion() {
        let arcs = arcs_from_window_scores(&[ws("p1", 1, 0.6), ws("p1", 0, 0.4)], "valence", 5, 1).unwrap();
        assert_eq!(arcs.len(), 1);
        assert_eq!(arcs[0].points, [0.4, 0.6]);

        let err = arcs_from_window_scores(&[ws("p1", 0, 0.4), ws("p1", 2, 0.6)], "valence", 5, 1).unwrap_err();
        assert!(matches!(err, ArcError::NonContiguousIndices { missing: 1, .. }));

        let err = arcs_from_window_scores(&[ws("p1", 0, 0.4), ws("p1", 0, 0.5)], "valence", 5, 1).unwrap_err();
        assert!(matches!(err, ArcError::DuplicateIndex { index: 0, .. }));

        let err = arcs_from_window_scores(&[ws("p1", 0, 1.4)], "valence", 5, 1).unwrap_err();
        assert!(matches!(err, ArcError::ScoreOutOfRange { .. }));

        let arcs = arcs_from_window_scores(&[ws("b", 0, 0.1), ws("a", 0, 0.2), ws("b", 1, 0.3)], "v", 5, 1).unwrap();
        let ids: Vec<_> = arcs.iter().map(|a| a.doc_id.as_str()).collect();
        assert_eq!(ids, ["b", "a"]);
    }

    #[test]
    fn window_score_csv_reports_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "doc_id,window_index,score\np1,0,0.4\np1,0,0.5\n").unwrap();
        let rows = read_window_scores::<f64>(&path).unwrap();
        let err = arcs_from_window_scores(&rows, "v", 5, 1).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");

        std::fs::write(&path, "doc_id,window_index,score\np1,x,0.4\n").unwrap();
        let err = read_window_scores::<f64>(&path).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        std::fs::write(&path, "doc,window_index,score\n").unwrap();
        assert!(read_window_scores::<f64>(&path).is_err());
    }

    proptest! {
        #[test]
        fn points_are_window_means(scores in proptest::collection::vec(-1.0f64..1.0, 1..40), window in 1usize..8, step in 1usize..4) {
            prop_assume!(scores.len() >= window);
            let arc = build_arc(&seq(scores.clone()), window, step).unwrap();
            prop_assert_eq!(arc.len(), (scores.len() - window) / step + 1);
            for (i, p) in arc.points.iter().enumerate() {
                let w = &scores[i * step..i * step + window];
                let brute: f64 = w.iter().sum::<f64>() / window as f64;
                prop_assert!((p - brute).abs() <= 1e-12);
            }
        }

        #[test]
        fn shift_and_scale_equivariant(scores in proptest::collection::vec(-1.0f64..1.0, 5..30), c in -2.0f64..2.0, s in 0.1f64..5.0) {
            let base = build_arc(&seq(scores.clone()), 5, 1).unwrap();
            let shifted = build_arc(&seq(scores.iter().map(|v| v + c).collect()), 5, 1).unwrap();
            let scaled = build_arc(&seq(scores.iter().map(|v| v * s).collect()), 5, 1).unwrap();
            for i in 0..base.len() {
                prop_assert!((shifted.points[i] - (base.points[i] + c)).abs() <= 1e-12);
                prop_assert!((scaled.points[i] - base.points[i] * s).abs() <= 1e-12);
            }
        }
    }
}

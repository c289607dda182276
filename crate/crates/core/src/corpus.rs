//! Document collections: CSV ingestion, length filtering, analysis-unit
//! assembly (instance, speaker, meta-speaker) and per-group statistics.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::textproc::{preprocess, StopwordSet};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("corpus is missing column '{0}'")]
    MissingColumn(String),
    #[error("duplicate document id '{0}'")]
    DuplicateDocId(String),
    #[error("malformed corpus CSV at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
    #[error("document '{0}' has an empty group label")]
    EmptyGroup(String),
    #[error("speaker mode requires a speaker for every document; '{0}' has none")]
    MissingSpeaker(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub group: String,
    pub speaker: Option<String>,
    pub seq: Option<i64>,
}

/// Column names used when reading a corpus CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusColumns {
    pub id: String,
    pub text: String,
    pub group: String,
    pub speaker: Option<String>,
    pub seq: Option<String>,
}

impl Default for CorpusColumns {
    fn default() -> Self {
        Self { id: "id".into(), text: "text".into(), group: "grade".into(), speaker: None, seq: None }
    }
}

pub fn load_corpus(path: &Path, columns: &CorpusColumns) -> Result<Vec<Document>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CorpusError::FileNotFound(path.to_path_buf()),
        _ => CorpusError::MalformedCsv { line: 0, reason: e.to_string() },
    })?;
    read_corpus(file, columns)
}

pub fn read_corpus<R: std::io::Read>(reader: R, columns: &CorpusColumns) -> Result<Vec<Document>, CorpusError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CorpusError::MalformedCsv { line: 1, reason: e.to_string() })?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').trim() == name)
            .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
    };
    let id_col = find(&columns.id)?;
    let text_col = find(&columns.text)?;
    let group_col = find(&columns.group)?;
    let speaker_col = columns.speaker.as_deref().map(find).transpose()?;
    let seq_col = columns.seq.as_deref().map(find).transpose()?;

    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CorpusError::MalformedCsv {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let get = |i: usize| record.get(i).unwrap_or("");
        let doc_id = get(id_col).trim().to_string();
        if !seen.insert(doc_id.clone()) {
            return Err(CorpusError::DuplicateDocId(doc_id));
        }
        let group = get(group_col).trim().to_string();
        if group.is_empty() {
            return Err(CorpusError::EmptyGroup(doc_id));
        }
        let speaker = speaker_col.map(|i| get(i).trim().to_string()).filter(|s| !s.is_empty());
        let seq = match seq_col.map(|i| get(i).trim()).filter(|s| !s.is_empty()) {
            Some(raw) => Some(raw.parse::<i64>().map_err(|_| CorpusError::MalformedCsv {
                line,
                reason: format!("sequence value '{raw}' is not an integer"),
            })?),
            None => None,
        };
        docs.push(Document { doc_id, text: get(text_col).to_string(), group, speaker, seq });
    }
    Ok(docs)
}

/// Whitespace-token count of the raw text.
pub fn raw_word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Token count after preprocessing and stopword removal.
pub fn content_word_count(text: &str, stopwords: &StopwordSet) -> usize {
    preprocess("", text, stopwords).len()
}

/// Keeps documents whose stopword-free token count lies in `[min_words, max_words]`.
pub fn filter_by_length(docs: Vec<Document>, stopwords: &StopwordSet, min_words: usize, max_words: Option<usize>) -> Vec<Document> {
    docs.into_iter()
        .filter(|d| {
            let n = content_word_count(&d.text, stopwords);
            n >= min_words && max_words.is_none_or(|max| n <= max)
        })
        .collect()
}

/// Granularity at which metrics are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitMode {
    /// One unit per document.
    #[default]
    Instance,
    /// One unit per speaker, documents in sequence order.
    Speaker,
    /// One unit per group, documents in sequence order.
    MetaSpeaker,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisUnit {
    pub unit_id: String,
    pub mode: UnitMode,
    pub group: String,
    pub doc_ids: Vec<String>,
    /// Constituent texts joined by newlines, in sequence order.
    pub text: String,
}

/// Orders group labels numerically when both parse as integers, numeric
/// labels before others, otherwise lexicographically.
pub fn compare_groups(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

fn unit_from(unit_id: String, mode: UnitMode, mut members: Vec<(usize, &Document)>) -> AnalysisUnit {
    members.sort_by(|(ia, a), (ib, b)| {
        let ka = a.seq.unwrap_or(*ia as i64);
        let kb = b.seq.unwrap_or(*ib as i64);
        ka.cmp(&kb).then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    AnalysisUnit {
        unit_id,
        mode,
        group: members[0].1.group.clone(),
        doc_ids: members.iter().map(|(_, d)| d.doc_id.clone()).collect(),
        text: members.iter().map(|(_, d)| d.text.as_str()).collect::<Vec<_>>().join("\n"),
    }
}

/// Groups documents into analysis units. Missing `seq` values fall back to
/// file position; ties break by document id. A speaker unit takes the group
/// of its earliest document.
pub fn assemble_units(docs: &[Document], mode: UnitMode) -> Result<Vec<AnalysisUnit>, CorpusError> {
    if mode == UnitMode::Instance {
        return Ok(docs
            .iter()
            .map(|d| AnalysisUnit {
                unit_id: d.doc_id.clone(),
                mode,
                group: d.group.clone(),
                doc_ids: vec![d.doc_id.clone()],
                text: d.text.clone(),
            })
            .collect());
    }

    let mut order: Vec<&str> = Vec::new();
    let mut members: HashMap<&str, Vec<(usize, &Document)>> = HashMap::new();
    for (i, d) in docs.iter().enumerate() {
        let key = match mode {
            UnitMode::Speaker => d.speaker.as_deref().ok_or_else(|| CorpusError::MissingSpeaker(d.doc_id.clone()))?,
            _ => d.group.as_str(),
        };
        members
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push((i, d));
    }
    if mode == UnitMode::MetaSpeaker {
        order.sort_by(|a, b| compare_groups(a, b));
    }
    Ok(order
        .into_iter()
        .map(|key| unit_from(key.to_string(), mode, members.remove(key).unwrap_or_default()))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub group: String,
    pub n_docs: usize,
    /// Mean whitespace-token count of the raw text.
    pub mean_words: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub groups: Vec<GroupStats>,
    pub total: GroupStats,
}

pub fn corpus_stats(docs: &[Document]) -> CorpusStats {
    let mut acc: HashMap<&str, (usize, usize)> = HashMap::new();
    for d in docs {
        let e = acc.entry(&d.group).or_default();
        e.0 += 1;
        e.1 += raw_word_count(&d.text);
    }
    let row = |group: &str, (n, words): (usize, usize)| GroupStats {
        group: group.to_string(),
        n_docs: n,
        mean_words: if n == 0 { 0.0 } else { words as f64 / n as f64 },
    };
    let mut groups: Vec<GroupStats> = acc.iter().map(|(g, &v)| row(g, v)).collect();
    groups.sort_by(|a, b| compare_groups(&a.group, &b.group));
    let totals = acc.values().fold((0, 0), |(n, w), &(dn, dw)| (n + dn, w + dw));
    CorpusStats { groups, total: row("total", totals) }
}

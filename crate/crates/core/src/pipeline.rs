//! Batch runs: corpus → tokens → arcs → metrics → tables.
//!
//! Units are processed in parallel and merged back in input order, so repeated
//! runs over the same inputs produce byte-identical files. Each run also writes
//! a JSON manifest echoing its configuration.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::arcs::{self, ArcError, DEFAULT_STEP, DEFAULT_WINDOW};
use crate::corpus::{self, CorpusColumns, CorpusError, GroupStats, UnitMode};
use crate::dynamics::{ued_metrics, Deviation, DynamicsConfig, DynamicsError, PeakReference};
use crate::lexicon::{load_lexicon, Lexicon, LexiconError, LexiconFormat, NeutralBand, Rescale, VAD_DIMENSIONS};
use crate::report::{
    self, aggregate_by_group, plot_series, reference_overlay, Cell, ExportFormat, GroupSummaryWithAdult,
    ReferenceOverlay, ReportError, Tabular, UnitRecord,
};
use crate::scalar::Scalar;
use crate::textproc::{self, StopwordSet, TextError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Arc(#[from] ArcError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("document '{0}' in the scores file has no metadata row")]
    UnknownDocument(String),
}

impl PipelineError {
    /// 1 for usage or configuration problems, 2 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            _ => 2,
        }
    }
}

type Result<T, E = PipelineError> = std::result::Result<T, E>;

/// Rescaling choice for a lexicon; `Auto` rescales valence/arousal/dominance
/// lexicons to `[-1, 1]` and leaves others on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RescaleChoice {
    #[default]
    Auto,
    None,
    Signed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconSpec {
    pub path: PathBuf,
    pub format: LexiconFormat,
    pub rescale: RescaleChoice,
}

impl LexiconSpec {
    /// Loads the file. Lexicons whose scores are signed get a neutral band
    /// centered on zero; unsigned ones only when `neutral_half_width > 0`.
    pub fn load<T: Scalar>(&self, neutral_half_width: f64) -> Result<(Lexicon<T>, Option<NeutralBand<T>>)> {
        let probe: Lexicon<T> = load_lexicon(&self.path, &self.format, Rescale::None)?;
        let rescale = match self.rescale {
            RescaleChoice::None => Rescale::None,
            RescaleChoice::Signed => Rescale::ZeroOneToSignedUnit,
            RescaleChoice::Auto if probe.dimension_names().iter().all(|d| VAD_DIMENSIONS.contains(&d.as_str())) => {
                Rescale::ZeroOneToSignedUnit
            }
            RescaleChoice::Auto => Rescale::None,
        };
        let lexicon = if rescale == Rescale::None { probe } else { load_lexicon(&self.path, &self.format, rescale)? };
        let band = (rescale != Rescale::None || neutral_half_width > 0.0)
            .then(|| NeutralBand::new(T::zero(), T::of(neutral_half_width)))
            .transpose()?;
        Ok((lexicon, band))
    }
}

/// Settings that shape arcs and metrics, shared by `analyze` and `scores`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSettings {
    pub window: usize,
    pub step: usize,
    pub homebase_k: f64,
    pub deviation: Deviation,
    pub peak_reference: PeakReference,
}

impl Default for MetricSettings {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            step: DEFAULT_STEP,
            homebase_k: 1.0,
            deviation: Deviation::Population,
            peak_reference: PeakReference::Mean,
        }
    }
}

impl MetricSettings {
    fn validate(&self) -> Result<()> {
        if self.window == 0 || self.step == 0 {
            return Err(PipelineError::Config("window and step must be at least 1".into()));
        }
        if !(self.homebase_k.is_finite() && self.homebase_k >= 0.0) {
            return Err(PipelineError::Config("homebase k must be a finite non-negative number".into()));
        }
        Ok(())
    }

    fn dynamics<T: Scalar>(&self) -> DynamicsConfig<T> {
        DynamicsConfig { k: T::of(self.homebase_k), deviation: self.deviation, peak_reference: self.peak_reference }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub lexicons: Vec<LexiconSpec>,
    pub dimensions: Vec<String>,
    #[serde(flatten)]
    pub metrics: MetricSettings,
    pub min_emotion_words: usize,
    pub neutral_half_width: f64,
    pub mode: UnitMode,
    pub min_words: Option<usize>,
    pub max_words: Option<usize>,
    /// `None` selects the packaged English list.
    pub stopwords: Option<PathBuf>,
    pub columns: CorpusColumns,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lexicons: Vec::new(),
            dimensions: Vec::new(),
            metrics: MetricSettings::default(),
            min_emotion_words: 5,
            neutral_half_width: 0.0,
            mode: UnitMode::Instance,
            min_words: None,
            max_words: None,
            stopwords: None,
            columns: CorpusColumns::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.metrics.validate()?;
        if self.min_emotion_words < self.metrics.window {
            return Err(PipelineError::Config(format!(
                "min-emotion-words ({}) must be at least the window size ({})",
                self.min_emotion_words, self.metrics.window
            )));
        }
        if !(self.neutral_half_width.is_finite() && self.neutral_half_width >= 0.0) {
            return Err(PipelineError::Config("neutral half-width must be a finite non-negative number".into()));
        }
        if self.lexicons.is_empty() {
            return Err(PipelineError::Config("at least one lexicon is required".into()));
        }
        if self.dimensions.is_empty() {
            return Err(PipelineError::Config("at least one dimension is required".into()));
        }
        if let (Some(lo), Some(hi)) = (self.min_words, self.max_words) {
            if lo > hi {
                return Err(PipelineError::Config(format!("min-words ({lo}) exceeds max-words ({hi})")));
            }
        }
        Ok(())
    }

    pub fn load_stopwords(&self) -> Result<StopwordSet> {
        Ok(match &self.stopwords {
            Some(p) => textproc::load_stopwords(p)?,
            None => StopwordSet::english(),
        })
    }
}

/// A dimension bound to the lexicon that declares it.
pub struct DimensionSource<'a, T> {
    pub dimension: String,
    pub lexicon: &'a Lexicon<T>,
    pub band: Option<NeutralBand<T>>,
}

/// Maps every configured dimension to exactly one loaded lexicon.
pub fn resolve_dimensions<'a, T: Scalar>(
    dimensions: &[String],
    lexicons: &'a [(Lexicon<T>, Option<NeutralBand<T>>)],
) -> Result<Vec<DimensionSource<'a, T>>> {
    dimensions
        .iter()
        .map(|dim| {
            let dim = dim.trim().to_lowercase();
            let mut hits = lexicons.iter().filter(|(l, _)| l.dimension_index(&dim).is_some());
            let (lexicon, band) = hits
                .next()
                .ok_or_else(|| PipelineError::Config(format!("dimension '{dim}' is not declared by any lexicon")))?;
            if hits.next().is_some() {
                return Err(PipelineError::Config(format!("dimension '{dim}' is declared by more than one lexicon")));
            }
            Ok(DimensionSource { dimension: dim, lexicon, band: *band })
        })
        .collect()
}

/// Units excluded from a dimension for having too few emotion words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exclusions {
    pub dimension: String,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOutcome<T> {
    pub records: Vec<UnitRecord<T>>,
    pub n_documents: usize,
    pub n_units: usize,
    pub exclusions: Vec<Exclusions>,
}

/// Computes per-unit metrics for every (unit, dimension) pair, dimension-major,
/// units in assembly order.
pub fn analyze_documents<T: Scalar>(
    docs: Vec<corpus::Document>,
    sources: &[DimensionSource<'_, T>],
    stopwords: &StopwordSet,
    config: &RunConfig,
) -> Result<AnalyzeOutcome<T>> {
    let docs = match (config.min_words, config.max_words) {
        (None, None) => docs,
        (lo, hi) => corpus::filter_by_length(docs, stopwords, lo.unwrap_or(0), hi),
    };
    let n_documents = docs.len();
    let units = corpus::assemble_units(&docs, config.mode)?;
    let tokens: Vec<_> = units
        .par_iter()
        .map(|u| textproc::preprocess(&u.unit_id, &u.text, stopwords))
        .collect();
    let dynamics = config.metrics.dynamics::<T>();

    let mut records = Vec::new();
    let mut exclusions = Vec::new();
    for src in sources {
        let per_unit: Vec<Option<UnitRecord<T>>> = units
            .par_iter()
            .zip(tokens.par_iter())
            .map(|(unit, toks)| -> Result<Option<UnitRecord<T>>> {
                let seq = arcs::emotion_word_sequence(toks, src.lexicon, &src.dimension, src.band.as_ref())?;
                if seq.scores.len() < config.min_emotion_words {
                    return Ok(None);
                }
                let arc = arcs::build_arc(&seq, config.metrics.window, config.metrics.step)?;
                let metrics = ued_metrics(&arc, &dynamics)?;
                Ok(Some(UnitRecord {
                    group: unit.group.clone(),
                    n_tokens: Some(toks.len()),
                    n_emotion_words: Some(seq.scores.len()),
                    metrics,
                }))
            })
            .collect::<Result<_>>()?;
        let kept: Vec<_> = per_unit.into_iter().flatten().collect();
        exclusions.push(Exclusions { dimension: src.dimension.clone(), excluded: units.len() - kept.len() });
        records.extend(kept);
    }
    Ok(AnalyzeOutcome { records, n_documents, n_units: units.len(), exclusions })
}

/// Default manifest location: `<output stem>.manifest.json` beside the output.
pub fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

/// `analyze`: corpus CSV → per-unit metrics CSV plus manifest.
pub fn cmd_analyze(config: &RunConfig, corpus_path: &Path, output: &Path) -> Result<AnalyzeOutcome<f64>> {
    config.validate()?;
    let stopwords = config.load_stopwords()?;
    let lexicons = config
        .lexicons
        .iter()
        .map(|spec| spec.load::<f64>(config.neutral_half_width))
        .collect::<Result<Vec<_>>>()?;
    let sources = resolve_dimensions(&config.dimensions, &lexicons)?;
    let docs = corpus::load_corpus(corpus_path, &config.columns)?;
    let outcome = analyze_documents(docs, &sources, &stopwords, config)?;

    report::export(&outcome.records, ExportFormat::Csv, output)?;
    let manifest = json!({
        "command": "analyze",
        "version": env!("CARGO_PKG_VERSION"),
        "corpus": corpus_path,
        "output": output,
        "config": config,
        "lexicons": lexicons.iter().map(|(l, band)| json!({
            "name": l.name(),
            "dimensions": l.dimension_names(),
            "terms": l.len(),
            "skipped_multiword": l.skipped_multiword(),
            "rescale": l.rescale(),
            "neutral_band": band.map(|b| json!({"center": b.center(), "half_width": b.half_width()})),
        })).collect::<Vec<_>>(),
        "n_documents": outcome.n_documents,
        "n_units": outcome.n_units,
        "n_records": outcome.records.len(),
        "exclusions": outcome.exclusions,
    });
    report::write_json(&manifest, &manifest_path(output))?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoresConfig {
    pub dimension: String,
    #[serde(flatten)]
    pub metrics: MetricSettings,
    pub columns: CorpusColumns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoresOutcome<T> {
    pub records: Vec<UnitRecord<T>>,
    /// True when the scores file had no data rows.
    pub empty_input: bool,
}

/// `scores`: externally scored windows + metadata CSV → per-unit metrics CSV.
pub fn cmd_scores(config: &ScoresConfig, scores_path: &Path, metadata_path: &Path, output: &Path) -> Result<ScoresOutcome<f64>> {
    config.metrics.validate()?;
    if config.dimension.trim().is_empty() {
        return Err(PipelineError::Config("a dimension name is required".into()));
    }
    let rows = arcs::read_window_scores::<f64>(scores_path)?;
    let docs = corpus::load_corpus(metadata_path, &config.columns)?;
    let groups: std::collections::HashMap<&str, &str> =
        docs.iter().map(|d| (d.doc_id.as_str(), d.group.as_str())).collect();
    let arcs = arcs::arcs_from_window_scores(&rows, &config.dimension, config.metrics.window, config.metrics.step)?;
    let dynamics = config.metrics.dynamics::<f64>();
    let records = arcs
        .par_iter()
        .map(|arc| {
            let group = groups.get(arc.doc_id.as_str()).ok_or_else(|| PipelineError::UnknownDocument(arc.doc_id.clone()))?;
            Ok(UnitRecord {
                group: group.to_string(),
                n_tokens: None,
                n_emotion_words: None,
                metrics: ued_metrics(arc, &dynamics)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    report::export(&records, ExportFormat::Csv, output)?;
    let manifest = json!({
        "command": "scores",
        "version": env!("CARGO_PKG_VERSION"),
        "scores": scores_path,
        "metadata": metadata_path,
        "output": output,
        "config": config,
        "n_records": records.len(),
    });
    report::write_json(&manifest, &manifest_path(output))?;
    Ok(ScoresOutcome { records, empty_input: rows.is_empty() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateOutputs {
    pub groups_csv: PathBuf,
    pub series_json: PathBuf,
    pub overlay_csv: Option<PathBuf>,
}

/// `aggregate`: per-unit CSV → group CSV, plot series JSON and, with an
/// adult reference, an overlay CSV.
pub fn cmd_aggregate(
    input: &Path,
    min_units: usize,
    adult: Option<&ReferenceOverlay>,
    outputs: &AggregateOutputs,
) -> Result<Vec<report::GroupSummary<f64>>> {
    if min_units == 0 {
        return Err(PipelineError::Config("min-units must be at least 1".into()));
    }
    let records = report::read_unit_records(input)?;
    let summaries = aggregate_by_group(&records, min_units);
    match adult {
        Some(reference) => {
            let rows: Vec<_> = summaries
                .iter()
                .map(|s| GroupSummaryWithAdult { summary: s.clone(), adult: reference.get(&s.dimension, s.metric) })
                .collect();
            report::export(&rows, ExportFormat::Csv, &outputs.groups_csv)?;
        }
        None => report::export(&summaries, ExportFormat::Csv, &outputs.groups_csv)?,
    }
    report::write_json(&plot_series(&summaries, adult), &outputs.series_json)?;
    if let (Some(reference), Some(path)) = (adult, &outputs.overlay_csv) {
        let overlay = reference_overlay(&summaries, reference)?;
        report::export(&overlay, ExportFormat::Csv, path)?;
    }
    Ok(summaries)
}

impl Tabular for GroupStats {
    fn header() -> Vec<&'static str> {
        vec!["group", "n_docs", "mean_words"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![Cell::Text(self.group.clone()), Cell::Int(Some(self.n_docs)), Cell::Real(Some(self.mean_words))]
    }
}

/// `stats`: per-group document counts and mean raw lengths, total row last.
/// An empty corpus yields a header-only table.
pub fn cmd_stats(corpus_path: &Path, columns: &CorpusColumns) -> Result<Vec<GroupStats>> {
    let docs = corpus::load_corpus(corpus_path, columns)?;
    let stats = corpus::corpus_stats(&docs);
    let mut rows = stats.groups;
    if !rows.is_empty() {
        rows.push(stats.total);
    }
    Ok(rows)
}

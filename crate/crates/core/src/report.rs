//! Group aggregation, adult-reference overlays and table export.
//!
//! Reals are written with six decimals (round-half-even on exact binary
//! ties); absent values become an empty CSV cell or JSON `null`. Every file is
//! written to a temporary sibling and renamed into place.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::corpus::compare_groups;
use crate::dynamics::UedMetrics;
use crate::scalar::Scalar;

const BUILTIN_ADULT_CSV: &str = include_str!("../data/adult_reference.csv");

pub const DEFAULT_MIN_UNITS: usize = 5;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {reason}")]
    Schema { path: PathBuf, line: usize, reason: String },
    #[error("no reference value for dimension '{dimension}', metric '{metric}'")]
    DimensionMismatch { dimension: String, metric: Metric },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Average,
    Variability,
    RiseRate,
    RecoveryRate,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Average, Metric::Variability, Metric::RiseRate, Metric::RecoveryRate];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Average => "average",
            Metric::Variability => "variability",
            Metric::RiseRate => "rise_rate",
            Metric::RecoveryRate => "recovery_rate",
        }
    }

    pub fn of<T: Scalar>(self, m: &UedMetrics<T>) -> Option<T> {
        match self {
            Metric::Average => Some(m.average),
            Metric::Variability => Some(m.variability),
            Metric::RiseRate => m.rise_rate,
            Metric::RecoveryRate => m.recovery_rate,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown metric '{s}'"))
    }
}

/// Metrics of one analysis unit on one dimension, with its group and token counts.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRecord<T> {
    pub group: String,
    /// Absent for externally scored windows.
    pub n_tokens: Option<usize>,
    pub n_emotion_words: Option<usize>,
    pub metrics: UedMetrics<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary<T> {
    pub group: String,
    pub dimension: String,
    pub metric: Metric,
    /// Absent when fewer than the threshold number of units define the metric.
    pub value: Option<T>,
    pub n_units: usize,
}

/// Means each metric per (group, dimension) over units where it is defined.
/// Output is ordered by dimension (first appearance), metric, then group.
pub fn aggregate_by_group<T: Scalar>(records: &[UnitRecord<T>], min_units: usize) -> Vec<GroupSummary<T>> {
    let min_units = min_units.max(1);
    let mut dims: Vec<&str> = Vec::new();
    let mut groups: Vec<&str> = Vec::new();
    let mut values: HashMap<(&str, &str, Metric), Vec<T>> = HashMap::new();
    for r in records {
        let dim = r.metrics.dimension.as_str();
        if !dims.contains(&dim) {
            dims.push(dim);
        }
        if !groups.contains(&r.group.as_str()) {
            groups.push(&r.group);
        }
        for metric in Metric::ALL {
            let slot = values.entry((r.group.as_str(), dim, metric)).or_default();
            if let Some(v) = metric.of(&r.metrics) {
                slot.push(v);
            }
        }
    }
    groups.sort_by(|a, b| compare_groups(a, b));

    let mut out = Vec::new();
    for &dim in &dims {
        for metric in Metric::ALL {
            for &group in &groups {
                let Some(vals) = values.get_mut(&(group, dim, metric)) else { continue };
                // summation order fixed so the mean does not depend on input order
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                let value = if vals.len() >= min_units { crate::scalar::mean(vals) } else { None };
                out.push(GroupSummary {
                    group: group.to_string(),
                    dimension: dim.to_string(),
                    metric,
                    value,
                    n_units: vals.len(),
                });
            }
        }
    }
    out
}

/// Adult reference values per (dimension, metric).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceOverlay {
    values: Vec<(String, Metric, f64)>,
}

impl ReferenceOverlay {
    /// The packaged adult-poem reference table (7 dimensions × 4 metrics).
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_ADULT_CSV, Path::new("adult_reference.csv")).expect("packaged reference table parses")
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }

    fn parse(text: &str, path: &Path) -> Result<Self, ReportError> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let schema = |line: usize, reason: String| ReportError::Schema { path: path.to_path_buf(), line, reason };
        let headers = rdr.headers().map_err(|e| schema(1, e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["dimension", "metric", "value"] {
            return Err(schema(1, "expected header dimension,metric,value".into()));
        }
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| schema(line, e.to_string()))?;
            let metric = rec[1].trim().parse::<Metric>().map_err(|e| schema(line, e))?;
            let value = rec[2].trim().parse::<f64>().map_err(|e| schema(line, e.to_string()))?;
            values.push((rec[0].trim().to_lowercase(), metric, value));
        }
        Ok(Self { values })
    }

    pub fn get(&self, dimension: &str, metric: Metric) -> Option<f64> {
        self.values.iter().find(|(d, m, _)| d == dimension && *m == metric).map(|v| v.2)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One (dimension, metric) series across groups with its adult constant.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayRow {
    pub dimension: String,
    pub metric: Metric,
    pub adult: f64,
    /// (group, value, n_units) in group order.
    pub series: Vec<(String, Option<f64>, usize)>,
    /// Group whose defined value is closest to the adult value; earliest on ties.
    pub nearest_group: Option<String>,
}

type SeriesPoint = (String, Option<f64>, usize);

fn series_of<T: Scalar>(summaries: &[GroupSummary<T>]) -> Vec<((String, Metric), Vec<SeriesPoint>)> {
    let mut out: Vec<((String, Metric), Vec<SeriesPoint>)> = Vec::new();
    for s in summaries {
        let key = (s.dimension.clone(), s.metric);
        let point = (s.group.clone(), s.value.map(Scalar::to_f64_lossy), s.n_units);
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pts)) => pts.push(point),
            None => out.push((key, vec![point])),
        }
    }
    out
}

pub fn reference_overlay<T: Scalar>(
    summaries: &[GroupSummary<T>],
    adult: &ReferenceOverlay,
) -> Result<Vec<OverlayRow>, ReportError> {
    series_of(summaries)
        .into_iter()
        .map(|((dimension, metric), series)| {
            let adult_value = adult
                .get(&dimension, metric)
                .ok_or_else(|| ReportError::DimensionMismatch { dimension: dimension.clone(), metric })?;
            let mut nearest: Option<(&str, f64)> = None;
            for (g, v, _) in &series {
                if let Some(v) = v {
                    let gap = (v - adult_value).abs();
                    if nearest.is_none_or(|(_, best)| gap < best) {
                        nearest = Some((g, gap));
                    }
                }
            }
            let nearest_group = nearest.map(|(g, _)| g.to_string());
            Ok(OverlayRow { dimension, metric, adult: adult_value, series, nearest_group })
        })
        .collect()
}

/// Plot-ready series: one object per (dimension, metric) with parallel
/// `groups`, `values` and `n_units` arrays, plus `adult` when a reference is given.
pub fn plot_series<T: Scalar>(summaries: &[GroupSummary<T>], adult: Option<&ReferenceOverlay>) -> Value {
    let rows = series_of(summaries)
        .into_iter()
        .map(|((dimension, metric), series)| {
            let mut obj = Map::new();
            obj.insert("dimension".into(), Value::String(dimension.clone()));
            obj.insert("metric".into(), Value::String(metric.to_string()));
            obj.insert("groups".into(), series.iter().map(|(g, _, _)| Value::String(g.clone())).collect());
            obj.insert("values".into(), series.iter().map(|(_, v, _)| real_json(*v)).collect());
            obj.insert("n_units".into(), series.iter().map(|(_, _, n)| Value::from(*n)).collect());
            if let Some(reference) = adult {
                obj.insert("adult".into(), real_json(reference.get(&dimension, metric)));
            }
            Value::Object(obj)
        })
        .collect();
    Value::Array(rows)
}

/// A table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(Option<usize>),
    Real(Option<f64>),
}

/// Records exportable as CSV rows or JSON objects.
pub trait Tabular {
    fn header() -> Vec<&'static str>;
    fn cells(&self) -> Vec<Cell>;
}

/// Six-decimal fixed notation; negative zero is written as zero.
pub fn format_real(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn real_json(v: Option<f64>) -> Value {
    v.and_then(|v| Number::from_str(&format_real(v)).ok()).map_or(Value::Null, Value::Number)
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.map(|v| v.to_string()).unwrap_or_default(),
            Cell::Real(v) => v.map(format_real).unwrap_or_default(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(v) => v.map_or(Value::Null, Value::from),
            Cell::Real(v) => real_json(*v),
        }
    }
}

impl<T: Scalar> Tabular for UnitRecord<T> {
    fn header() -> Vec<&'static str> {
        vec![
            "doc_id", "group", "dimension", "n_tokens", "n_emotion_words", "arc_len", "average", "variability",
            "rise_rate", "recovery_rate", "n_displacements", "n_complete", "n_truncated",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        let m = &self.metrics;
        vec![
            Cell::Text(m.doc_id.clone()),
            Cell::Text(self.group.clone()),
            Cell::Text(m.dimension.clone()),
            Cell::Int(self.n_tokens),
            Cell::Int(self.n_emotion_words),
            Cell::Int(Some(m.arc_len)),
            Cell::Real(Some(m.average.to_f64_lossy())),
            Cell::Real(Some(m.variability.to_f64_lossy())),
            Cell::Real(m.rise_rate.map(Scalar::to_f64_lossy)),
            Cell::Real(m.recovery_rate.map(Scalar::to_f64_lossy)),
            Cell::Int(Some(m.n_displacements)),
            Cell::Int(Some(m.n_complete)),
            Cell::Int(Some(m.n_truncated)),
        ]
    }
}

impl<T: Scalar> Tabular for GroupSummary<T> {
    fn header() -> Vec<&'static str> {
        vec!["group", "dimension", "metric", "value", "n_units"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Text(self.group.clone()),
            Cell::Text(self.dimension.clone()),
            Cell::Text(self.metric.to_string()),
            Cell::Real(self.value.map(Scalar::to_f64_lossy)),
            Cell::Int(Some(self.n_units)),
        ]
    }
}

/// A group summary row carrying the matching adult reference value.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummaryWithAdult<T> {
    pub summary: GroupSummary<T>,
    pub adult: Option<f64>,
}

impl<T: Scalar> Tabular for GroupSummaryWithAdult<T> {
    fn header() -> Vec<&'static str> {
        let mut h = GroupSummary::<T>::header();
        h.push("adult_value");
        h
    }

    fn cells(&self) -> Vec<Cell> {
        let mut c = self.summary.cells();
        c.push(Cell::Real(self.adult));
        c
    }
}

impl Tabular for OverlayRow {
    fn header() -> Vec<&'static str> {
        vec!["dimension", "metric", "adult_value", "nearest_group"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Text(self.dimension.clone()),
            Cell::Text(self.metric.to_string()),
            Cell::Real(Some(self.adult)),
            Cell::Text(self.nearest_group.clone().unwrap_or_default()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

pub fn to_csv_bytes<R: Tabular>(records: &[R]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(R::header()).expect("in-memory write");
    for r in records {
        w.write_record(r.cells().iter().map(Cell::csv)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn to_json_value<R: Tabular>(records: &[R]) -> Value {
    let header = R::header();
    Value::Array(
        records
            .iter()
            .map(|r| Value::Object(header.iter().zip(r.cells()).map(|(h, c)| (h.to_string(), c.json())).collect()))
            .collect(),
    )
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let io = |source| ReportError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn write_json(value: &Value, path: &Path) -> Result<(), ReportError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("JSON values serialize");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn export<R: Tabular>(records: &[R], format: ExportFormat, path: &Path) -> Result<(), ReportError> {
    match format {
        ExportFormat::Csv => write_atomic(path, &to_csv_bytes(records)),
        ExportFormat::Json => write_json(&to_json_value(records), path),
    }
}

fn read_table(path: &Path, expected: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>, ReportError> {
    let schema = |line: usize, reason: String| ReportError::Schema { path: path.to_path_buf(), line, reason };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => ReportError::Io { path: path.to_path_buf(), source },
        other => schema(0, format!("{other:?}")),
    })?;
    let headers = rdr.headers().map_err(|e| schema(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(schema(1, format!("expected header {}", expected.join(","))));
    }
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| schema(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
            Ok((r.position().map_or(0, |p| p.line() as usize), r))
        })
        .collect()
}

fn parse_opt<V: FromStr>(raw: &str, line: usize, path: &Path, col: &str) -> Result<Option<V>, ReportError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse().map(Some).map_err(|_| ReportError::Schema {
        path: path.to_path_buf(),
        line,
        reason: format!("column {col}: cannot parse '{raw}'"),
    })
}

fn parse_req<V: FromStr>(raw: &str, line: usize, path: &Path, col: &str) -> Result<V, ReportError> {
    parse_opt(raw, line, path, col)?.ok_or_else(|| ReportError::Schema {
        path: path.to_path_buf(),
        line,
        reason: format!("column {col} is empty"),
    })
}

/// Reads a per-unit metrics CSV written by [`export`].
pub fn read_unit_records(path: &Path) -> Result<Vec<UnitRecord<f64>>, ReportError> {
    read_table(path, &UnitRecord::<f64>::header())?
        .into_iter()
        .map(|(line, r)| {
            Ok(UnitRecord {
                group: r[1].to_string(),
                n_tokens: parse_opt(&r[3], line, path, "n_tokens")?,
                n_emotion_words: parse_opt(&r[4], line, path, "n_emotion_words")?,
                metrics: UedMetrics {
                    doc_id: r[0].to_string(),
                    dimension: r[2].to_string(),
                    arc_len: parse_req(&r[5], line, path, "arc_len")?,
                    average: parse_req(&r[6], line, path, "average")?,
                    variability: parse_req(&r[7], line, path, "variability")?,
                    rise_rate: parse_opt(&r[8], line, path, "rise_rate")?,
                    recovery_rate: parse_opt(&r[9], line, path, "recovery_rate")?,
                    n_displacements: parse_req(&r[10], line, path, "n_displacements")?,
                    n_complete: parse_req(&r[11], line, path, "n_complete")?,
                    n_truncated: parse_req(&r[12], line, path, "n_truncated")?,
                },
            })
        })
        .collect()
}

/// Reads a group summary CSV written by [`export`].
pub fn read_group_summaries(path: &Path) -> Result<Vec<GroupSummary<f64>>, ReportError> {
    read_table(path, &GroupSummary::<f64>::header())?
        .into_iter()
        .map(|(line, r)| {
            Ok(GroupSummary {
                group: r[0].to_string(),
                dimension: r[1].to_string(),
                metric: parse_req(&r[2], line, path, "metric")?,
                value: parse_opt(&r[3], line, path, "value")?,
                n_units: parse_req(&r[4], line, path, "n_units")?,
            })
        })
        .collect()
}

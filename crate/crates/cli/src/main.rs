use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ued_core::corpus::{CorpusColumns, UnitMode};
use ued_core::dynamics::{Deviation, PeakReference};
use ued_core::lexicon::LexiconFormat;
use ued_core::pipeline::{self, AggregateOutputs, LexiconSpec, MetricSettings, PipelineError, RescaleChoice, RunConfig, ScoresConfig};
use ued_core::report::{self, ExportFormat, ReferenceOverlay};

#[derive(Parser)]
#[command(name = "ued", version, about = "Emotion arcs and emotion dynamics metrics for document collections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-unit metrics from a corpus CSV and word-emotion lexicons
    Analyze(AnalyzeArgs),
    /// Compute per-unit metrics from externally scored windows
    Scores(ScoresArgs),
    /// Average per-unit metrics by group
    Aggregate(AggregateArgs),
    /// Per-group document counts and mean lengths
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Multi,
    Wide,
}

#[derive(Clone, Copy, ValueEnum)]
enum RescaleArg {
    Auto,
    None,
    Signed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Instance,
    Speaker,
    Meta,
}

#[derive(Args)]
struct MetricArgs {
    /// Window size in emotion words
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    /// Home base half-width in standard deviations
    #[arg(long, default_value_t = 1.0)]
    homebase_k: f64,
    /// Use the N-1 standard deviation instead of the population one
    #[arg(long)]
    sample_sd: bool,
    /// Measure peak distance from the home-base boundary instead of its center
    #[arg(long)]
    boundary_distance: bool,
}

impl MetricArgs {
    fn settings(&self) -> MetricSettings {
        MetricSettings {
            window: self.window,
            step: self.step,
            homebase_k: self.homebase_k,
            deviation: if self.sample_sd { Deviation::Sample } else { Deviation::Population },
            peak_reference: if self.boundary_distance { PeakReference::Boundary } else { PeakReference::Mean },
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Lexicon file; `DIM=PATH` reads a single-dimension `term<TAB>score` file
    #[arg(long, required = true)]
    lexicon: Vec<String>,
    /// Layout of lexicon files given without `DIM=`
    #[arg(long, value_enum, default_value_t = FormatArg::Multi)]
    lexicon_format: FormatArg,
    #[arg(long, value_enum, default_value_t = RescaleArg::Auto)]
    rescale: RescaleArg,
    #[arg(long, required = true)]
    dimension: Vec<String>,
    #[command(flatten)]
    metrics: MetricArgs,
    #[arg(long, default_value_t = 5)]
    min_emotion_words: usize,
    #[arg(long, default_value_t = 0.0)]
    neutral_half_width: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Instance)]
    mode: ModeArg,
    /// Minimum stopword-free word count per document
    #[arg(long)]
    min_words: Option<usize>,
    #[arg(long)]
    max_words: Option<usize>,
    /// Stopword file (one term per line); defaults to the packaged English list
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long, default_value = "id")]
    id_col: String,
    #[arg(long, default_value = "text")]
    text_col: String,
    #[arg(long, default_value = "grade")]
    group_col: String,
    #[arg(long)]
    speaker_col: Option<String>,
    #[arg(long)]
    seq_col: Option<String>,
    /// Per-unit metrics CSV; a manifest is written beside it
    #[arg(long, default_value = "per_unit.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ScoresArgs {
    /// CSV with header doc_id,window_index,score
    #[arg(long)]
    scores: PathBuf,
    /// Corpus CSV supplying each document's group
    #[arg(long)]
    metadata: PathBuf,
    #[arg(long)]
    dimension: String,
    #[command(flatten)]
    metrics: MetricArgs,
    #[arg(long, default_value = "id")]
    id_col: String,
    #[arg(long, default_value = "text")]
    text_col: String,
    #[arg(long, default_value = "grade")]
    group_col: String,
    #[arg(long, default_value = "per_unit.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct AggregateArgs {
    /// Per-unit metrics CSV
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 5)]
    min_units: usize,
    #[arg(long, default_value = "groups.csv")]
    out: PathBuf,
    /// Plot series JSON; defaults to the group CSV path with a .json extension
    #[arg(long)]
    series: Option<PathBuf>,
    /// Adult reference CSV (dimension,metric,value)
    #[arg(long, conflicts_with = "builtin_adult_ref")]
    adult_ref: Option<PathBuf>,
    /// Use the packaged adult reference table
    #[arg(long)]
    builtin_adult_ref: bool,
    /// Overlay table (requires an adult reference)
    #[arg(long)]
    overlay_out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "id")]
    id_col: String,
    #[arg(long, default_value = "text")]
    text_col: String,
    #[arg(long, default_value = "grade")]
    group_col: String,
    /// Output CSV; printed to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_lexicon(arg: &str, format: FormatArg, rescale: RescaleArg) -> LexiconSpec {
    let rescale = match rescale {
        RescaleArg::Auto => RescaleChoice::Auto,
        RescaleArg::None => RescaleChoice::None,
        RescaleArg::Signed => RescaleChoice::Signed,
    };
    if let Some((dim, path)) = arg.split_once('=') {
        if !dim.is_empty() && dim.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-') {
            return LexiconSpec {
                path: path.into(),
                format: LexiconFormat::Single { dimension: dim.to_lowercase() },
                rescale,
            };
        }
    }
    let format = match format {
        FormatArg::Multi => LexiconFormat::Multi,
        FormatArg::Wide => LexiconFormat::Wide,
    };
    LexiconSpec { path: arg.into(), format, rescale }
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), PipelineError> {
    let config = RunConfig {
        lexicons: args.lexicon.iter().map(|l| parse_lexicon(l, args.lexicon_format, args.rescale)).collect(),
        dimensions: args.dimension,
        metrics: args.metrics.settings(),
        min_emotion_words: args.min_emotion_words,
        neutral_half_width: args.neutral_half_width,
        mode: match args.mode {
            ModeArg::Instance => UnitMode::Instance,
            ModeArg::Speaker => UnitMode::Speaker,
            ModeArg::Meta => UnitMode::MetaSpeaker,
        },
        min_words: args.min_words,
        max_words: args.max_words,
        stopwords: args.stopwords,
        columns: CorpusColumns {
            id: args.id_col,
            text: args.text_col,
            group: args.group_col,
            speaker: args.speaker_col,
            seq: args.seq_col,
        },
    };
    let outcome = pipeline::cmd_analyze(&config, &args.corpus, &args.out)?;
    eprintln!(
        "{} documents, {} units, {} records written to {}",
        outcome.n_documents,
        outcome.n_units,
        outcome.records.len(),
        args.out.display()
    );
    for ex in &outcome.exclusions {
        eprintln!(
            "{}: {} of {} units excluded (fewer than {} emotion words)",
            ex.dimension, ex.excluded, outcome.n_units, config.min_emotion_words
        );
    }
    Ok(())
}

fn run_scores(args: ScoresArgs) -> Result<(), PipelineError> {
    let config = ScoresConfig {
        dimension: args.dimension.to_lowercase(),
        metrics: args.metrics.settings(),
        columns: CorpusColumns { id: args.id_col, text: args.text_col, group: args.group_col, speaker: None, seq: None },
    };
    let outcome = pipeline::cmd_scores(&config, &args.scores, &args.metadata, &args.out)?;
    if outcome.empty_input {
        eprintln!("warning: {} contains no window scores", args.scores.display());
    }
    eprintln!("{} records written to {}", outcome.records.len(), args.out.display());
    Ok(())
}

fn run_aggregate(args: AggregateArgs) -> Result<(), PipelineError> {
    let adult = match (&args.adult_ref, args.builtin_adult_ref) {
        (Some(path), _) => Some(ReferenceOverlay::load(path)?),
        (None, true) => Some(ReferenceOverlay::builtin()),
        (None, false) => None,
    };
    if args.overlay_out.is_some() && adult.is_none() {
        return Err(PipelineError::Config("--overlay-out needs --adult-ref or --builtin-adult-ref".into()));
    }
    let outputs = AggregateOutputs {
        series_json: args.series.clone().unwrap_or_else(|| args.out.with_extension("json")),
        groups_csv: args.out,
        overlay_csv: args.overlay_out,
    };
    let summaries = pipeline::cmd_aggregate(&args.input, args.min_units, adult.as_ref(), &outputs)?;
    let nulls = summaries.iter().filter(|s| s.value.is_none()).count();
    eprintln!(
        "{} group rows written to {} ({} below the {}-unit threshold)",
        summaries.len(),
        outputs.groups_csv.display(),
        nulls,
        args.min_units
    );
    Ok(())
}

fn run_stats(args: StatsArgs) -> Result<(), PipelineError> {
    let columns = CorpusColumns { id: args.id_col, text: args.text_col, group: args.group_col, speaker: None, seq: None };
    let rows = pipeline::cmd_stats(&args.corpus, &columns)?;
    match args.out.as_deref() {
        Some(path) => report::export(&rows, ExportFormat::Csv, path)?,
        None => print!("{}", String::from_utf8_lossy(&report::to_csv_bytes(&rows))),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Scores(a) => run_scores(a),
        Command::Aggregate(a) => run_aggregate(a),
        Command::Stats(a) => run_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "geoburst", version, about = "Spatiotemporal term-burstiness mining and search")]
pub struct Cli {
    /// Flat key=value file; every key is a long flag name. Flags given on
    /// the command line win over the file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a corpus and write its summary, streams and frequencies.
    Ingest(IngestArgs),
    /// Mine temporal intervals, combinatorial or regional patterns per term.
    Mine(MineArgs),
    /// Generate a synthetic corpus with injected ground-truth patterns.
    Generate(GenerateArgs),
    /// Run the synthetic retrieval experiment and write the report CSV.
    Evaluate(EvaluateArgs),
    /// Build a search index from mined patterns.
    Index(IndexArgs),
    /// Query an index for the top-k bursty documents.
    Search(SearchArgs),
    /// Per-timestamp STLocal diagnostics as CSV.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// streams.json with x/y or lat/lon per stream.
    #[arg(long, value_name = "FILE")]
    pub streams: Option<PathBuf>,
    /// documents.jsonl, one document per line.
    #[arg(long, value_name = "FILE")]
    pub documents: Option<PathBuf>,
    /// frequencies.csv with stream,timestamp,term,count rows.
    #[arg(long, value_name = "FILE")]
    pub frequencies: Option<PathBuf>,
    /// Pairwise distance matrix; stream positions come from MDS.
    #[arg(long, value_name = "FILE")]
    pub distances: Option<PathBuf>,
    /// Timeline length; defaults to the largest timestamp seen.
    #[arg(long)]
    pub timeline: Option<usize>,
    /// One stopword per line, replacing the built-in list.
    #[arg(long, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    RunningMean,
    WindowMean,
    External,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    /// Expected-frequency model for STLocal.
    #[arg(long, value_enum, default_value = "running-mean")]
    pub baseline: BaselineKind,
    /// Window length for the window-mean baseline.
    #[arg(long, default_value_t = 7)]
    pub window: usize,
    /// CSV of stream,timestamp,term,expected rows for the external baseline.
    #[arg(long, value_name = "FILE")]
    pub expected: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MineType {
    Temporal,
    Comb,
    Local,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long = "type", value_enum)]
    pub kind: MineType,
    /// Comma-separated terms to mine; all terms by default.
    #[arg(long, value_delimiter = ',')]
    pub terms: Option<Vec<String>>,
    /// Interval pool written by `mine --type temporal`; used by comb
    /// instead of a corpus.
    #[arg(long, value_name = "FILE")]
    pub intervals: Option<PathBuf>,
    /// Shuffles in the per-stream permutation test applied before comb
    /// mining; 0 keeps every interval.
    #[arg(long, default_value_t = 0)]
    pub null_rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub baseline: BaselineArgs,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Patterns JSON.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 365)]
    pub timeline: usize,
    #[arg(long, default_value_t = 100)]
    pub stream_count: usize,
    #[arg(long, default_value_t = 1000)]
    pub term_count: usize,
    #[arg(long, default_value_t = 100)]
    pub pattern_count: usize,
    /// Rate of the exponential background.
    #[arg(long, default_value_t = 1.0)]
    pub background_rate: f64,
    #[arg(long, value_enum, default_value = "nearest")]
    pub rounding: RoundingArg,
    /// Weibull shape range `lo,hi`.
    #[arg(long, value_parser = parse_range, default_value = "1.5,4")]
    pub shape: (f64, f64),
    /// Weibull scale range `lo,hi`, as a fraction of the pattern length.
    #[arg(long, value_parser = parse_range, default_value = "0.3,0.7")]
    pub scale: (f64, f64),
    /// Peak value range `lo,hi`.
    #[arg(long, value_parser = parse_range, default_value = "5,15")]
    pub peak: (f64, f64),
    /// Multiplier on the DISTGEN decay length.
    #[arg(long, default_value_t = 1.0)]
    pub tau_scale: f64,
    #[arg(long, value_enum, default_value = "decaying")]
    pub distance_rule: DistanceRuleArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoundingArg {
    Nearest,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceRuleArg {
    Decaying,
    Proportional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Distgen,
    Randgen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Stlocal,
    Stcomb,
    Base,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, value_enum, default_value = "distgen")]
    pub mode: ModeArg,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "distgen,randgen")]
    pub modes: Vec<ModeArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "stlocal,stcomb,base")]
    pub methods: Vec<MethodArg>,
    /// Patterns kept per injected pattern of a term, strongest first;
    /// 0 keeps every retrieved pattern.
    #[arg(long, default_value_t = 1)]
    pub depth: usize,
    #[arg(long, default_value_t = 19)]
    pub null_rounds: usize,
    #[command(flatten)]
    pub baseline: BaselineArgs,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Report CSV.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    /// Optional timing CSV: method, stream count, ms per term.
    #[arg(long, value_name = "FILE")]
    pub timing: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregateArg {
    Max,
    Min,
    Median,
    Mean,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Patterns JSON written by `mine --type comb` or `--type local`.
    #[arg(long, value_name = "FILE")]
    pub patterns: PathBuf,
    /// How the scores of several overlapping patterns combine.
    #[arg(long, value_enum, default_value = "max")]
    pub aggregate: AggregateArg,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PatternTypeArg {
    Comb,
    Local,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// Space-separated query terms.
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Expected pattern type of the index.
    #[arg(long, value_enum)]
    pub pattern_type: Option<PatternTypeArg>,
    /// JSON lines output; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_delimiter = ',')]
    pub terms: Option<Vec<String>>,
    #[command(flatten)]
    pub baseline: BaselineArgs,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Output directory for rectangles.csv, windows.csv and timing.csv.
    #[arg(long, value_name = "DIR")]
    pub output: PathBuf,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "silentspecies", version, about = "Estimate how much of a collection is still unseen")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tally records into a frequency spectrum or species histogram.
    Tally(TallyArgs),
    /// Chao1/Chao2 estimates, optionally one row per group.
    Estimate(EstimateArgs),
    /// Grouped table with pooled total, sorting and top-N selection.
    Report(ReportArgs),
    /// Subsample accumulation curve.
    Accumulate(AccumulateArgs),
    /// Percentile bootstrap interval for s_hat and coverage.
    Bootstrap(BootstrapArgs),
    /// Correlate a diversity proxy with coverage, or fit a trend to points.
    Correlate(CorrelateArgs),
    /// Generate synthetic observations with a known number of species.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// sample_id,species_id,count[,group columns]
    Long,
    /// species_id,count
    Histogram,
    /// r,f_r
    Spectrum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Abundance,
    Incidence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Markdown,
    Json,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").args(["input", "stdin"]).required(true)))]
pub struct InputArgs {
    /// Input CSV file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Read the input CSV from standard input.
    #[arg(long)]
    pub stdin: bool,
    #[arg(long, value_enum, default_value = "long")]
    pub input_format: InputFormat,
    #[arg(long, value_enum, default_value = "abundance")]
    pub mode: ModeArg,
    /// Sample count m for incidence histograms and spectra.
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// Apply the (m-1)/m small-sample factor to Chao2.
    #[arg(long)]
    pub correction: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EmitArg {
    Spectrum,
    Histogram,
}

#[derive(Debug, Args)]
pub struct TallyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub group_by: Option<String>,
    #[arg(long, value_enum, default_value = "spectrum")]
    pub emit: EmitArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[arg(long, default_value_t = silentspecies::rng::DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SortArg {
    Group,
    Types,
    Tokens,
    Ratio,
    F1,
    F2,
    Coverage,
    SHat,
}

#[derive(Debug, Args)]
pub struct SortArgs {
    #[arg(long, value_enum, default_value = "coverage")]
    pub sort_by: SortArg,
    /// Sort ascending instead of descending.
    #[arg(long)]
    pub ascending: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub group_by: Option<String>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub sort: SortArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[arg(long, default_value_t = silentspecies::rng::DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SizeArg {
    Observations,
    Types,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub group_by: String,
    /// Keep only the N largest groups.
    #[arg(long)]
    pub top_n: Option<usize>,
    /// How group size is measured for --top-n.
    #[arg(long, value_enum, default_value = "observations")]
    pub size_by: SizeArg,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub sort: SortArgs,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: OutputFormat,
    #[arg(long, default_value_t = silentspecies::rng::DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AccumulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated subsample sizes (tokens, or samples for incidence data).
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<u64>,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    #[arg(long, default_value_t = silentspecies::rng::DEFAULT_SEED)]
    pub seed: u64,
    /// Run one curve per group.
    #[arg(long)]
    pub group_by: Option<String>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = silentspecies::rng::DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProxyArg {
    Ttr,
    OneMinusTtr,
    Str,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").args(["input", "stdin", "points"]).required(true)))]
pub struct CorrelateArgs {
    /// Observation CSV to group and correlate.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub stdin: bool,
    #[arg(long, value_enum, default_value = "abundance")]
    pub mode: ModeArg,
    #[arg(long, requires = "x")]
    pub group_by: Option<String>,
    /// Per-group proxy on the x axis.
    #[arg(long, value_enum, requires = "group_by")]
    pub x: Option<ProxyArg>,
    /// CSV of points with named numeric columns.
    #[arg(long, requires_all = ["x_column", "y_column"])]
    pub points: Option<PathBuf>,
    #[arg(long)]
    pub x_column: Option<String>,
    #[arg(long)]
    pub y_column: Option<String>,
    /// Fit a polynomial of this degree and emit trend plot data instead.
    #[arg(long)]
    pub trend: Option<usize>,
    /// Bootstrap replicates for the trend band (0 disables it).
    #[arg(long, default_value_t = 0)]
    pub band_replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    #[arg(long, default_value_t = silentspecies::rng::DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistributionArg {
    Uniform,
    Zipf,
    Lognormal,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "zipf")]
    pub distribution: DistributionArg,
    #[arg(long, required_if_eq("distribution", "zipf"), conflicts_with = "sigma")]
    pub alpha: Option<f64>,
    #[arg(long, required_if_eq("distribution", "lognormal"))]
    pub sigma: Option<f64>,
    /// True number of species.
    #[arg(long)]
    pub species: usize,
    /// Tokens to draw (abundance data).
    #[arg(long, conflicts_with_all = ["sites", "per_site", "detection"], required_unless_present = "sites")]
    pub tokens: Option<u64>,
    /// Number of sites (incidence data).
    #[arg(long, requires = "per_site")]
    pub sites: Option<usize>,
    /// Tokens drawn at each site.
    #[arg(long)]
    pub per_site: Option<u64>,
    /// Probability that each drawn token is actually recorded.
    #[arg(long)]
    pub detection: Option<f64>,
    #[arg(long, default_value_t = silentspecies::rng::DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

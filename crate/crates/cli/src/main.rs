mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use corpus_distill::quality::{FilterKind, MissingScorePolicy};
use corpus_distill::ErrorCategory;

/// Fuzzy deduplication, quality filtering and token accounting for pretraining corpora.
#[derive(Parser, Debug)]
#[command(name = "corpus-distill", version)]
pub struct Cli {
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate and normalise the shards of a manifest.
    Ingest(IngestArgs),
    /// Write MinHash signature caches, one per source.
    Fingerprint(FingerprintArgs),
    /// Deduplicate within and/or across sources.
    Dedup(DedupArgs),
    /// Apply a quality or educational-score filter.
    Filter(FilterArgs),
    /// Render a stage accounting file as a token table.
    Report(ReportArgs),
    /// Cluster size histogram of a clusters file.
    Histogram(HistogramArgs),
    /// Sampling weights for a target mixture.
    Mixture(MixtureArgs),
    /// Run the full pipeline from a config file.
    Run(RunArgs),
}

#[derive(Args, Debug)]
pub struct CorpusArgs {
    /// Corpus manifest (TOML).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory receiving every output of the command.
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Stop at the first malformed record instead of skipping it.
    #[arg(long)]
    pub fail_fast: bool,
}

#[derive(Args, Debug)]
pub struct HashArgs {
    /// Hash seed; falls back to CORPUS_DISTILL_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 25)]
    pub shingle_size: usize,
    #[arg(long, default_value_t = 128)]
    pub num_perms: usize,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
}

#[derive(Args, Debug)]
pub struct FingerprintArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub hash: HashArgs,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("scope").required(true).multiple(true).args(["intra", "cross"])))]
pub struct DedupArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub hash: HashArgs,
    /// Deduplicate each source against itself.
    #[arg(long)]
    pub intra: bool,
    /// Deduplicate all sources against each other.
    #[arg(long)]
    pub cross: bool,
    /// Drop candidate pairs whose exact shingle Jaccard is below this value.
    #[arg(long, value_name = "JACCARD")]
    pub threshold_verify: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub bands: usize,
    #[arg(long, default_value_t = 16)]
    pub rows: usize,
    /// Keeper order, best first; manifest ranks when omitted.
    #[arg(long, value_delimiter = ',')]
    pub ranking: Option<Vec<String>>,
    /// Worker threads.
    #[arg(long)]
    pub parallelism: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyArg {
    KeepHigh,
    RemoveLow,
    TopFraction,
    Edu,
    Passthrough,
}

impl PolicyArg {
    pub fn kind(self) -> FilterKind {
        match self {
            PolicyArg::KeepHigh => FilterKind::KeepHigh,
            PolicyArg::RemoveLow => FilterKind::RemoveLow,
            PolicyArg::TopFraction => FilterKind::TopFraction,
            PolicyArg::Edu => FilterKind::EduThreshold,
            PolicyArg::Passthrough => FilterKind::Passthrough,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingScoreArg {
    Fail,
    PassThrough,
}

impl From<MissingScoreArg> for MissingScorePolicy {
    fn from(m: MissingScoreArg) -> Self {
        match m {
            MissingScoreArg::Fail => MissingScorePolicy::Fail,
            MissingScoreArg::PassThrough => MissingScorePolicy::PassThrough,
        }
    }
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum)]
    pub policy: PolicyArg,
    /// Sources the filter acts on; defaults to zyda-1,dolma-cc (fineweb-edu2 for `edu`).
    #[arg(long, value_delimiter = ',')]
    pub applies_to: Option<Vec<String>>,
    /// Score record files joined onto documents before label policies.
    #[arg(long)]
    pub scores: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "fail")]
    pub missing_score: MissingScoreArg,
    #[arg(long, default_value_t = 0.15)]
    pub top_fraction: f64,
    #[arg(long, default_value_t = 3)]
    pub min_edu_score: i64,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Stage accounting JSON (as written to reports/accounting.json).
    pub accounting: PathBuf,
    /// Print the machine-readable table instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct HistogramArgs {
    /// Clusters file (JSON lines).
    pub clusters: PathBuf,
    /// Also write histogram.svg and histogram.tsv into --output-dir.
    #[arg(long, requires = "output_dir")]
    pub plot: bool,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("counts").required(true).args(["accounting", "native"])))]
pub struct MixtureArgs {
    /// Take native counts from the last stage of an accounting file.
    #[arg(long)]
    pub accounting: Option<PathBuf>,
    /// JSON object of source → native token count.
    #[arg(long)]
    pub native: Option<PathBuf>,
    /// Raise UPWEIGHT to REFERENCE's size; defaults to fineweb-edu=dclm.
    #[arg(long, value_name = "UPWEIGHT=REFERENCE", conflicts_with = "targets")]
    pub equalize: Option<String>,
    /// JSON object of source → target proportion.
    #[arg(long)]
    pub targets: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config and CORPUS_DISTILL_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub parallelism: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.category() {
                ErrorCategory::Data => 2,
                ErrorCategory::Environment => 3,
            })
        }
    }
}

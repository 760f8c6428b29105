//! `falsematch` command-line entry point.

mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "falsematch",
    version,
    about = "Metamorphic false-matching harness for vector retrieval"
)]
struct Cli {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run every stage on a single thread.
    #[arg(long, global = true)]
    sequential: bool,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tag labeled sentence pairs with their metamorphic relation.
    Tag(TagArgs),
    /// Complete tagged pairs into a triplet corpus.
    Build(BuildArgs),
    /// Toggle the swapped-negative control variant of a corpus.
    Transform(TransformArgs),
    /// Materialize a vector file for every distinct text of a corpus.
    Embed(EmbedArgs),
    /// Match every triplet under the given methods and scorers.
    Eval(EvalArgs),
    /// Merge outcome dumps and render report tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct TagArgs {
    /// Pairs file (`{id, s1, s2, label}` per line).
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Tagged pairs output; defaults to a `.tagged.jsonl` sibling.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Tagged pairs file.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Corpus name written to the header; defaults to the output file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// Use the offline rule-based generator.
    #[arg(long, conflicts_with_all = ["gen_endpoint", "recorded"])]
    pub stub: bool,
    /// Generation service URL.
    #[arg(long, conflicts_with = "recorded")]
    pub gen_endpoint: Option<String>,
    /// Replay generations recorded as JSON lines.
    #[arg(long)]
    pub recorded: Option<PathBuf>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Output path; defaults to a sibling of the input.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Swap each negative with a partner's positive (or undo a previous swap).
    #[arg(long, required = true)]
    pub non_metamorphic: bool,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long, short)]
    pub corpus: Option<PathBuf>,
    /// Provider, e.g. `char:512` or `http:MODEL@URL#DIM`.
    #[arg(long, short)]
    pub provider: String,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Store components as base64 little-endian f64.
    #[arg(long)]
    pub binary: bool,
    /// Keep the source text next to each vector.
    #[arg(long)]
    pub keep_text: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, short)]
    pub corpus: Option<PathBuf>,
    /// Control corpus; adds the accuracy-drop table.
    #[arg(long)]
    pub control: Option<PathBuf>,
    /// `PROVIDER+METRIC` items, e.g. `bow+CD,char:512+MhD`.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Providers crossed with `--metrics`.
    #[arg(long, value_delimiter = ',')]
    pub providers: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// `containment`, `jaccard`, `cassette:PATH` or an HTTP endpoint.
    #[arg(long)]
    pub scorer: Vec<String>,
    /// Also score every order-sensitive scorer with arguments swapped.
    #[arg(long)]
    pub reverse: bool,
    #[arg(long, short)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub eps_scale: Option<f64>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Outcome dumps to merge.
    #[arg(required = true)]
    pub dumps: Vec<PathBuf>,
    #[arg(long, short)]
    pub output_dir: PathBuf,
    /// Also write long-format plot data.
    #[arg(long)]
    pub plot: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Partial(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

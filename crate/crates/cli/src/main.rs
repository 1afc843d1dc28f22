//! `dnaphash`: hash, index, query, simulate and benchmark DNA perceptual hashes.

mod commands;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "dnaphash",
    version,
    about = "DCT sign-only perceptual hashes for DNA sequences"
)]
struct Cli {
    /// Worker threads for hashing and simulation.
    #[arg(long, global = true, env = "DNAPHASH_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print `id<TAB>hex_hash` for every FASTA record.
    Hash(HashArgs),
    /// Hash a reference collection into an index file.
    Index(IndexArgs),
    /// Look up query sequences in an index.
    Query(QueryArgs),
    /// Run a divergence-rate simulation and write a distance histogram CSV.
    Simulate(SimulateArgs),
    /// Measure generation and hashing throughput.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    /// Block for 64-bit hashes, zigzag otherwise.
    Auto,
    Block,
    Zigzag,
    ZigzagSkipDc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NPolicyArg {
    Reject,
    SkipRecord,
}

#[derive(Debug, Args)]
struct HashOpts {
    /// Hash width in bits.
    #[arg(long, default_value_t = 64)]
    width: usize,
    /// Coefficient selection strategy.
    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    strategy: StrategyArg,
}

#[derive(Debug, Args)]
struct FastaOpts {
    /// FASTA files; `-` or no argument reads standard input.
    #[arg(value_name = "FASTA")]
    inputs: Vec<PathBuf>,
    /// Handling of records containing symbols other than A, C, G, T.
    #[arg(long, value_enum, default_value_t = NPolicyArg::Reject)]
    n_policy: NPolicyArg,
}

#[derive(Debug, Args)]
struct HashArgs {
    #[command(flatten)]
    fasta: FastaOpts,
    #[command(flatten)]
    hash: HashOpts,
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[command(flatten)]
    fasta: FastaOpts,
    #[command(flatten)]
    hash: HashOpts,
    /// Index file to write.
    #[arg(short, long)]
    output: PathBuf,
    /// Hash fixed-size windows of this many bp instead of whole sequences.
    #[arg(long)]
    window: Option<usize>,
    /// Distance between window starts (defaults to the window size).
    #[arg(long, requires = "window")]
    step: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["max_dist", "top_k"])))]
struct QueryArgs {
    /// Index file produced by `dnaphash index`.
    #[arg(long)]
    index: PathBuf,
    #[command(flatten)]
    fasta: FastaOpts,
    /// Report every reference within this Hamming distance.
    #[arg(long)]
    max_dist: Option<u32>,
    /// Report the k nearest references.
    #[arg(long)]
    top_k: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Preset group A-F.
    #[arg(long, conflicts_with_all = ["len", "width"])]
    group: Option<String>,
    /// Sequence length for a custom group.
    #[arg(long, requires = "width")]
    len: Option<usize>,
    /// Hash width for a custom group.
    #[arg(long, requires = "len")]
    width: Option<usize>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    strategy: StrategyArg,
    /// Primary sequences to generate.
    #[arg(long, default_value_t = dnaphash::simulator::DEFAULT_N_PRIMARY)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated divergence rates as fractions.
    #[arg(long, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
    /// Also simulate rate 0, whose distances must all be 0.
    #[arg(long)]
    identity_control: bool,
    /// CSV destination (standard output when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write every (ordinal, rate, distance) triple to this CSV.
    #[arg(long)]
    per_pair: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    len: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(Failure::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start worker pool: {e}")))?;
    }
    match cli.command {
        Command::Hash(args) => commands::hash(args),
        Command::Index(args) => commands::index(args),
        Command::Query(args) => commands::query(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Bench(args) => commands::bench(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(Failure::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("dnaphash: {failure}");
            ExitCode::from(failure.code())
        }
    }
}

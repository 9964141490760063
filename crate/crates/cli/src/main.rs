//! `tagrank`: build tag indices, recommend tags and compare methods.

mod commands;
mod error;
mod methods;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "tagrank", version, about = "Popularity-aware tag ranking and recommendation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest a corpus TSV, build adjacency matrices and write an index.
    Build(BuildArgs),
    /// Check a corpus TSV and print its summary statistics.
    Validate(ValidateArgs),
    /// Recommend tags for inline seeds or every post of a seed file.
    Recommend(RecommendArgs),
    /// Run several methods over a seed file and write a comparison CSV.
    Compare(CompareArgs),
    /// Write a seeded synthetic corpus TSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// Comma-separated variants: fp, u, ufp-plus, ufp-product, cooccurrence.
    #[arg(long, value_delimiter = ',', default_value = "fp,u,ufp-plus,ufp-product,cooccurrence")]
    variants: Vec<String>,
    /// Popularity smoothing k.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    k: f64,
    #[arg(long)]
    zero_diagonal: bool,
    /// Add k to the numerator only.
    #[arg(long)]
    literal_k: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    corpus: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct RankArgs {
    #[arg(long, default_value_t = 10, help = "Number of tags to recommend")]
    n: usize,
    #[arg(long, default_value_t = 0.85)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
    /// Neighbour posts for cf and cf-dfw.
    #[arg(long, default_value_t = 25)]
    neighbors: usize,
    /// Ridge regularization for cf-dfw weights.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
}

#[derive(Debug, Args)]
struct RecommendArgs {
    #[arg(long)]
    index: PathBuf,
    /// fp, u, ufp-plus, ufp-product, cooccurrence, tagcoor, cf or cf-dfw.
    #[arg(long, default_value = "ufp-product")]
    method: String,
    /// Comma-separated seed tags.
    #[arg(long, conflicts_with = "seed_file", required_unless_present = "seed_file")]
    seeds: Option<String>,
    /// TSV of `post_id \t tag1,tag2,...`.
    #[arg(long)]
    seed_file: Option<PathBuf>,
    #[command(flatten)]
    rank: RankArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<String>,
    #[arg(long)]
    seed_file: PathBuf,
    /// Variant whose global ranking defines the mean-rank metric.
    #[arg(long, default_value = "ufp-product")]
    rank_variant: String,
    /// Directory to persist each method's run as JSON.
    #[arg(long)]
    save_runs: Option<PathBuf>,
    #[command(flatten)]
    rank: RankArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 10_000)]
    posts: usize,
    #[arg(long, default_value_t = 2_000)]
    users: usize,
    #[arg(long, default_value_t = 20_000)]
    tags: usize,
    #[arg(long, default_value_t = 12.0)]
    mean_tags: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(a) => commands::build(a),
        Command::Validate(a) => commands::validate(a),
        Command::Recommend(a) => commands::recommend(a),
        Command::Compare(a) => commands::compare(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tagrank: {e}");
            e.exit_code()
        }
    }
}

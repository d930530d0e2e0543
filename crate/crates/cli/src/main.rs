//! Command-line operator surface: generate synthetic workloads, ingest
//! trajectory data, build and persist indexes, run single or batched
//! queries, sweep benchmarks, and run the reference-scan equivalence check.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 configuration error,
//! 3 data error, 4 infeasible query, 5 equivalence-check failure.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "subtraj",
    version,
    about = "Subtrajectory similarity search in road networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic road network and random-walk trajectories.
    Gen(GenArgs),
    /// Validate and ingest trajectory records into a database artifact.
    Ingest(IngestArgs),
    /// Build an inverted index from a database artifact.
    BuildIndex(BuildIndexArgs),
    /// Run one query or a batch of queries.
    Query(QueryArgs),
    /// Sweep query lengths and threshold ratios, reporting mean timings and
    /// verification rates.
    Bench(BenchArgs),
    /// Compare the indexed search against the direct scan on seeded
    /// synthetic scenarios.
    OracleCheck(OracleCheckArgs),
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long)]
    pub seed: u64,
    /// Output directory for nodes.tsv, edges.tsv, trajs.tsv.
    #[arg(long)]
    pub out_dir: std::path::PathBuf,
    /// Grid network as ROWSxCOLS.
    #[arg(long, default_value = "10x10")]
    pub grid: String,
    /// Random geometric network as COUNT,RADIUS (overrides --grid).
    #[arg(long)]
    pub geometric: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub trajs: usize,
    #[arg(long, default_value_t = 50)]
    pub len_min: usize,
    #[arg(long, default_value_t = 50)]
    pub len_max: usize,
    /// Omit timestamps from the generated trajectories.
    #[arg(long)]
    pub no_timestamps: bool,
}

#[derive(Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub nodes: std::path::PathBuf,
    #[arg(long)]
    pub edges: std::path::PathBuf,
    #[arg(long)]
    pub trajs: std::path::PathBuf,
    /// vertex or edge.
    #[arg(long, default_value = "vertex")]
    pub representation: String,
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Args)]
pub struct BuildIndexArgs {
    #[arg(long)]
    pub db: std::path::PathBuf,
    #[arg(long)]
    pub out: std::path::PathBuf,
    /// Order postings by departure time to accelerate temporal queries.
    #[arg(long)]
    pub temporal_order: bool,
}

#[derive(Args, Clone)]
pub struct ModelArgs {
    /// Cost model: lev, edr, erp, netedr, neterp, surs.
    #[arg(long)]
    pub cost: Option<String>,
    /// Matching threshold for edr/netedr.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Neighborhood threshold: a number, or "auto".
    #[arg(long)]
    pub eta: Option<String>,
    /// Reference point for erp: "lon,lat" or "auto" (vertex barycenter).
    #[arg(long)]
    pub erp_ref: Option<String>,
    /// Insertion/deletion constant for neterp.
    #[arg(long)]
    pub neterp_del: Option<f64>,
}

#[derive(Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub nodes: Option<std::path::PathBuf>,
    #[arg(long)]
    pub edges: Option<std::path::PathBuf>,
    #[arg(long)]
    pub db: Option<std::path::PathBuf>,
    /// Persisted index; built in memory when omitted.
    #[arg(long)]
    pub index: Option<std::path::PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, conflicts_with = "tau_ratio")]
    pub tau: Option<f64>,
    #[arg(long)]
    pub tau_ratio: Option<f64>,
    /// Inline query as comma-separated external symbol ids.
    #[arg(long, conflicts_with_all = ["query_file", "sample_len"])]
    pub symbols: Option<String>,
    /// File of query records (one per line, trajectory file format).
    #[arg(long, conflicts_with = "sample_len")]
    pub query_file: Option<std::path::PathBuf>,
    /// Sample the query as a subtrajectory of the database.
    #[arg(long)]
    pub sample_len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub sample_seed: u64,
    /// Temporal constraint type: contained or overlaps.
    #[arg(long, requires = "interval")]
    pub temporal: Option<String>,
    /// Temporal interval as "lo,hi" seconds.
    #[arg(long)]
    pub interval: Option<String>,
    /// Output format: tsv or jsonl.
    #[arg(long)]
    pub format: Option<String>,
    /// Emit candidate counts, verification rates, and stage timings.
    #[arg(long)]
    pub stats: bool,
    /// Also run the direct scan and compare the result sets.
    #[arg(long)]
    pub oracle_check: bool,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub nodes: Option<std::path::PathBuf>,
    #[arg(long)]
    pub edges: Option<std::path::PathBuf>,
    #[arg(long)]
    pub db: Option<std::path::PathBuf>,
    #[arg(long)]
    pub index: Option<std::path::PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "0.1,0.2,0.3")]
    pub tau_ratios: String,
    #[arg(long, default_value = "20,60")]
    pub q_lens: String,
    /// Queries sampled per (length, ratio) combination.
    #[arg(long, default_value_t = 100)]
    pub queries: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Also report the candidate total a prefix-based selection would have
    /// produced.
    #[arg(long)]
    pub compare_prefix: bool,
    /// Also time the direct scan per combination (slow).
    #[arg(long)]
    pub with_scan: bool,
    /// Run the batch sequentially instead of in parallel.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args)]
pub struct OracleCheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scenarios per cost model.
    #[arg(long, default_value_t = 3)]
    pub scenarios: u64,
    /// Comma-separated cost models, or "all".
    #[arg(long, default_value = "all")]
    pub models: String,
    /// Attach temporal constraints to the sampled queries.
    #[arg(long)]
    pub temporal: bool,
    #[arg(long, default_value_t = 60)]
    pub trajs: usize,
    #[arg(long, default_value_t = 40)]
    pub max_len: usize,
    #[arg(long, default_value = "5,10,20")]
    pub q_lens: String,
    #[arg(long, default_value = "0.05,0.1,0.2,0.3")]
    pub tau_ratios: String,
    #[arg(long)]
    pub sequential: bool,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => commands::gen(args),
        Command::Ingest(args) => commands::ingest(args),
        Command::BuildIndex(args) => commands::build_index(args),
        Command::Query(args) => commands::query(args),
        Command::Bench(args) => commands::bench(args),
        Command::OracleCheck(args) => commands::oracle_check(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}

/// Error with a process exit code attached.
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: msg.into(),
        }
    }

    pub fn mismatch(msg: impl Into<String>) -> Self {
        CliError {
            code: 5,
            message: msg.into(),
        }
    }
}

impl From<subtraj_core::Error> for CliError {
    fn from(e: subtraj_core::Error) -> Self {
        use subtraj_core::Error;
        let code = match &e {
            Error::Infeasible(_) => 4,
            Error::CostModel(_) | Error::ExactTooLarge(..) => 2,
            Error::Io(_) => 1,
            _ => 3,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: 1,
            message: e.to_string(),
        }
    }
}

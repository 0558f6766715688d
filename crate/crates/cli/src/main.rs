//! Command-line front end: data ingestion, run configuration, and artifact
//! serialization for the clustering library.

mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bipartial",
    version,
    about = "Hierarchical aggregation clustering with a bi-partial objective"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a clustering pipeline and write its artifacts.
    Cluster(ClusterArgs),
    /// Sweep the cluster count p and write the objective curve.
    Sweep(SweepArgs),
    /// Cross-check a run against the exhaustive partition oracle.
    Verify(VerifyArgs),
    /// Query the exhaustive oracle directly.
    Oracle(OracleArgs),
    /// Generate the synthetic nested-blob dataset.
    Gen(GenArgs),
}

#[derive(Args, Clone, Default)]
struct CommonInput {
    /// Input CSV path (feature table, or square distance matrix with
    /// --input-kind matrix).
    #[arg(long)]
    input: Option<PathBuf>,
    /// "table" (default) or "matrix".
    #[arg(long)]
    input_kind: Option<String>,
    /// euclidean | squared_euclidean | manhattan.
    #[arg(long)]
    metric: Option<String>,
    /// average_preserving | max_complement | affine.
    #[arg(long)]
    transform: Option<String>,
    /// Offset c for the affine transform (requires c >= max distance).
    #[arg(long)]
    affine_offset: Option<f64>,
    /// Key=value config file; explicit flags override file entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ClusterArgs {
    #[command(flatten)]
    input: CommonInput,
    /// single | complete | upgma | wpgma | centroid | median |
    /// additive | minmax | avg_additive | facility | kmeans |
    /// kmeans_merge | hybrid.
    #[arg(long)]
    algorithm: Option<String>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dendrogram height source: "r" or "distance".
    #[arg(long)]
    height: Option<String>,
    /// Cluster count for the kmeans algorithm.
    #[arg(long)]
    p: Option<usize>,
    /// Restarts for kmeans-based algorithms.
    #[arg(long)]
    restarts: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// random | farthest_point.
    #[arg(long)]
    seeding: Option<String>,
    /// Outer-similarity weight of the bi-partial k-means objective.
    #[arg(long)]
    outer_weight: Option<f64>,
    /// centroid | pairsum (facility cluster-cost form).
    #[arg(long)]
    facility_cost: Option<String>,
    /// Scale of the facility dispersion cost.
    #[arg(long)]
    facility_scale: Option<f64>,
    /// Stage-1 cluster count of the hybrid (default: ceil(sqrt(n))).
    #[arg(long)]
    first_stage_p: Option<usize>,
    /// Stage-2 merger of the hybrid: kmeans | additive | minmax |
    /// avg_additive.
    #[arg(long)]
    hybrid_objective: Option<String>,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[command(flatten)]
    input: CommonInput,
    #[arg(long)]
    p_min: Option<usize>,
    #[arg(long)]
    p_max: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    outer_weight: Option<f64>,
    /// Output CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct VerifyArgs {
    #[command(flatten)]
    input: CommonInput,
    /// additive | minmax | avg_additive.
    #[arg(long)]
    objective: Option<String>,
    /// Optional merge-history JSON to check instead of a fresh run.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Enumeration guard override (hard cap 14).
    #[arg(long)]
    guard: Option<usize>,
    /// Report output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct OracleArgs {
    #[command(flatten)]
    input: CommonInput,
    /// additive | minmax | avg_additive.
    #[arg(long)]
    objective: Option<String>,
    /// Balance parameter r in [0, 1].
    #[arg(long)]
    r: Option<f64>,
    /// Enumeration guard override (hard cap 14).
    #[arg(long)]
    guard: Option<usize>,
}

#[derive(Args, Clone)]
struct GenArgs {
    /// Output CSV path for the generated table.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV path for the planted blob labels.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    blobs: Option<usize>,
    #[arg(long)]
    points_per_blob: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    base_separation: Option<f64>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Cluster(args) => run::cmd_cluster(args),
        Command::Sweep(args) => run::cmd_sweep(args),
        Command::Verify(args) => run::cmd_verify(args),
        Command::Oracle(args) => run::cmd_oracle(args),
        Command::Gen(args) => run::cmd_gen(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(run::exit_code_for(&e))
        }
    }
}

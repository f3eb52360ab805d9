//! `samplets` command-line tool.

mod args;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use args::{BasisArgs, H2Args, KernelArgs, Ordering, PointArgs};

#[derive(Debug, Parser)]
#[command(name = "samplets", version, about = "Samplet transforms and samplet-compressed kernel matrices")]
struct Cli {
    /// Worker threads for stages that parallelize deterministically.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Forward (or inverse) samplet transform of a data vector.
    Transform {
        #[command(flatten)]
        points: PointArgs,
        #[command(flatten)]
        basis: BasisArgs,
        /// Input vector (CSV column or binary vector format).
        #[arg(long)]
        data: PathBuf,
        /// Output vector; a `.bin` extension selects the binary format.
        #[arg(long, short)]
        output: PathBuf,
        /// Map samplet coefficients back to point values.
        #[arg(long)]
        inverse: bool,
        /// Zero coefficients below this absolute value.
        #[arg(long)]
        threshold: Option<f64>,
        /// Zero coefficients below 10^-i times the largest coefficient.
        #[arg(long, value_name = "I")]
        threshold_rel: Option<i32>,
        /// Allow the root scaling coefficients to be zeroed as well.
        #[arg(long)]
        no_protect_scaling: bool,
        /// JSON report destination (default: stdout).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compression report of a data vector for a range of thresholds.
    Compress {
        #[command(flatten)]
        points: PointArgs,
        #[command(flatten)]
        basis: BasisArgs,
        #[arg(long)]
        data: PathBuf,
        /// Exponents i of the thresholds 10^-i times the largest coefficient.
        #[arg(long, default_value = "1,2,3,4,5")]
        exponents: String,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Clusters carrying large samplet coefficients.
    Detect {
        #[command(flatten)]
        points: PointArgs,
        #[command(flatten)]
        basis: BasisArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_name = "I")]
        threshold_rel: Option<i32>,
        /// Report only leaf clusters.
        #[arg(long)]
        leaves_only: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Samplet-compressed kernel matrix in Matrix Market format.
    KernelCompress {
        #[command(flatten)]
        points: PointArgs,
        #[command(flatten)]
        basis: BasisArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        h2: H2Args,
        /// Ridge added to the diagonal of the written matrix.
        #[arg(long)]
        rho: Option<f64>,
        /// Compare against the dense transformed kernel matrix (small N only).
        #[arg(long)]
        dense_oracle: bool,
        #[arg(long, short)]
        output: PathBuf,
        /// Metrics sidecar (default: output path with `.json` appended).
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Gaussian random field realizations.
    Grf {
        #[command(flatten)]
        points: PointArgs,
        #[command(flatten)]
        basis: BasisArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        h2: H2Args,
        #[arg(long, default_value_t = 1e-2)]
        rho: f64,
        #[arg(long, value_enum, default_value_t = Ordering::MinimumDegree)]
        ordering: Ordering,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        /// Seed of the white-noise generator.
        #[arg(long)]
        sample_seed: u64,
        /// Directory receiving `field_<k>.csv` (or `.bin`) and `metrics.json`.
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long)]
        binary: bool,
        /// Also write the Cholesky factor.
        #[arg(long)]
        factor: Option<PathBuf>,
    },
    /// Assembly and factorization timings over a grid of sizes.
    Bench {
        /// Smallest and largest exponent k of N = 2^k.
        #[arg(long, default_value_t = 10)]
        min_exp: u32,
        #[arg(long, default_value_t = 14)]
        max_exp: u32,
        #[arg(long, default_value = "1,2")]
        dims: String,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        basis: BasisArgs,
        #[command(flatten)]
        h2: H2Args,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, value_enum, default_value_t = Ordering::MinimumDegree)]
        ordering: Ordering,
        /// CSV destination (default: stdout).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Tree and basis statistics of a point set.
    Info {
        #[command(flatten)]
        points: PointArgs,
        #[command(flatten)]
        basis: BasisArgs,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<samplets::Error>()) {
        Some(samplets::Error::NonPositivePivot { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

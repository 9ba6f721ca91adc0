//! `treeshap` — explain tree-ensemble predictions with exact SHAP values,
//! cross-check them against a brute-force Shapley oracle, compare with
//! classical attributions, and score attribution quality with supervised
//! clustering.

mod commands;
mod util;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "treeshap",
    version,
    about = "Exact SHAP attribution for decision-tree ensembles",
    after_help = "Exit codes: 0 success, 1 usage or I/O error, 2 validation or assertion failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExplainMethod {
    /// Polynomial-time exact SHAP values.
    Treeshap,
    /// Decision-path attribution.
    Path,
    /// Brute-force Shapley oracle (exponential; small feature counts only).
    Brute,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClusterMethod {
    /// Cluster SHAP attribution vectors.
    Treeshap,
    /// Cluster decision-path attribution vectors.
    Path,
    /// Cluster the raw feature vectors.
    Raw,
}

#[derive(Subcommand)]
enum Command {
    /// Explain each instance of a dataset as base value + per-feature contributions.
    Explain {
        /// Model document (JSON).
        #[arg(long)]
        model: PathBuf,
        /// Instance CSV: header row, one instance per row, all columns features.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "treeshap")]
        method: ExplainMethod,
        /// Output path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write flat CSV instead of JSON lines.
        #[arg(long)]
        csv: bool,
        /// Relative tolerance for the local-accuracy assertion.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Global importance scores: gain, split count, and (with --data) mean |SHAP|.
    Importance {
        #[arg(long)]
        model: PathBuf,
        /// Optional instance CSV for the mean-|SHAP| column.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Check the fast traversal against the brute-force oracle.
    Validate {
        /// Model to validate (default: a seeded random model suite).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Instances to validate on (default: seeded random instances).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Number of random models when no --model is given.
        #[arg(long, default_value_t = 25)]
        cases: usize,
        /// Instances per model when no --data is given.
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Absolute deviation tolerance (relative part is fixed at 1e-10).
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Negative control: perturb one attribution before comparing.
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Supervised clustering: merge attribution vectors, write the R^2 curve.
    Cluster {
        #[arg(long)]
        model: PathBuf,
        /// Labeled CSV: header row, features, last column outcome.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "treeshap")]
        method: ClusterMethod,
        /// Curve CSV output path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the clustered matrix as CSV.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
    },
    /// Time the traversal (and the oracle where feasible) on a grid of full trees.
    Bench {
        /// Tree counts, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
        trees: Vec<usize>,
        /// Tree depths, comma separated (leaves = 2^depth).
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
        depths: Vec<usize>,
        /// Feature counts, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "12")]
        features: Vec<usize>,
        /// Instances per grid cell (timings are averaged).
        #[arg(long, default_value_t = 3)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bench table output path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in two-model consistency comparison.
    Demo,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let kind = e.kind();
            let _ = e.print();
            return if kind == ErrorKind::DisplayHelp || kind == ErrorKind::DisplayVersion {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };

    let result = match cli.command {
        Command::Explain {
            model,
            data,
            method,
            out,
            csv,
            tol,
        } => commands::explain::run(&model, &data, method, out, csv, tol),
        Command::Importance {
            model,
            data,
            out,
            csv,
        } => commands::importance::run(&model, data.as_deref(), out, csv),
        Command::Validate {
            model,
            data,
            cases,
            instances,
            seed,
            tol,
            corrupt,
        } => commands::validate::run(
            model.as_deref(),
            data.as_deref(),
            cases,
            instances,
            seed,
            tol,
            corrupt,
        ),
        Command::Cluster {
            model,
            data,
            method,
            out,
            matrix_out,
        } => commands::cluster::run(&model, &data, method, out, matrix_out),
        Command::Bench {
            trees,
            depths,
            features,
            instances,
            seed,
            out,
        } => commands::bench::run(&trees, &depths, &features, instances, seed, out),
        Command::Demo => commands::demo::run(),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

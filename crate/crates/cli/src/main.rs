use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use mtmv_cli::commands::{self, ClusterArgs};
use mtmv_cli::error::CliError;

/// Multi-task multi-view training with task-affinity-driven layer widening.
#[derive(Parser)]
#[command(name = "mtmv", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic planted-structure dataset.
    Gen {
        /// Generation spec (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train with iterative layer widening and write run artifacts.
    Train {
        /// Training config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for run artifacts.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated view ids to train on (subset selection).
        #[arg(long, value_delimiter = ',')]
        views: Option<Vec<usize>>,
    },
    /// Export per-view affinity matrices of a trained model as CSV.
    Affinity {
        /// Training output directory (architecture + parameters).
        #[arg(long)]
        model: PathBuf,
        /// Dataset directory.
        #[arg(long)]
        data: PathBuf,
        /// Output directory for the CSV files.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated view ids matching the model's views.
        #[arg(long, value_delimiter = ',')]
        views: Option<Vec<usize>>,
    },
    /// Pick a branch count from affinity CSVs and emit the assignment.
    Cluster {
        /// Per-view affinity CSV (repeat per view).
        #[arg(long = "affinity", required = true)]
        affinity: Vec<PathBuf>,
        /// Comma-separated per-view weights (default: equal).
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.01)]
        l0: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Depth exponent in the structural term 2^p_t.
        #[arg(long = "p-t", default_value_t = 0)]
        p_t: u32,
        #[arg(long, default_value_t = 1)]
        d_min: usize,
        #[arg(long, default_value_t = 5)]
        d_max: usize,
        #[arg(long, default_value_t = 0.5)]
        lambda_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Paired t-test between two directories of run outputs.
    Report {
        /// First set of runs (a dir with report.json, or of such dirs).
        #[arg(long = "dir-a")]
        dir_a: PathBuf,
        /// Second set of runs, paired with the first by sorted order.
        #[arg(long = "dir-b")]
        dir_b: PathBuf,
        /// Score to compare: accuracy or macro_f1.
        #[arg(long, default_value = "accuracy")]
        metric: String,
        /// Write comparison.json/csv here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { config, out, seed } => commands::cmd_gen(&config, &out, seed),
        Command::Train { config, out, seed, views } => {
            commands::cmd_train(&config, &out, seed, views.as_deref())
        }
        Command::Affinity { model, data, out, views } => {
            commands::cmd_affinity(&model, &data, &out, views.as_deref())
        }
        Command::Cluster {
            affinity,
            weights,
            l0,
            alpha,
            p_t,
            d_min,
            d_max,
            lambda_scale,
            seed,
            out,
        } => {
            let args = ClusterArgs {
                affinity_paths: affinity,
                weights,
                l0,
                alpha,
                p_t,
                d_min,
                d_max,
                lambda_scale,
                seed,
            };
            commands::cmd_cluster(&args, &out)
        }
        Command::Report { dir_a, dir_b, metric, out } => {
            commands::cmd_report(&dir_a, &dir_b, &metric, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version displays are successes; everything else is a
            // usage error (exit 1).
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mtmv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

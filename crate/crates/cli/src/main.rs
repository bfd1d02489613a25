//! Experiment runner CLI.
//!
//! Exit codes: 0 on success, 1 on pipeline failure, 2 on usage errors.

use clap::{Args, Parser, Subcommand};
use infogame_cli::config::FileConfig;
use infogame_cli::pipelines::{self, *};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "infogame",
    about = "Seeded experiment pipelines: leakage-minimizing channel design, \
             mean-field-game solvers, bankruptcy allocation, nested games, \
             oscillator networks, and simplex clustering",
    version
)]
struct Cli {
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Base seed of the run; fixed seed means byte-identical outputs.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Channel-design comparison: solver vs greedy CDFs, trade-off curve,
    /// loss traces.
    Funnel {
        #[command(flatten)]
        common: Common,
        /// Fractional orders of the comparison sweep (comma separated).
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
        /// Number of seeded instances.
        #[arg(long)]
        seeds: Option<usize>,
        /// Use sampled sources of this size instead of analytic joints.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Fixed-point solver sweep over fractional orders.
    Mfg {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
        #[arg(long)]
        seeds: Option<usize>,
        /// State cells of the grid.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Shapley allocation of an estate over claims.
    Bankruptcy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        estate: Option<f64>,
        /// Comma-separated claim amounts.
        #[arg(long, value_delimiter = ',')]
        claims: Option<Vec<f64>>,
        /// Instance CSV: first data row the estate, second the claims.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Nested-game comparison across dissatisfaction rates plus cost-model
    /// instrumentation.
    Nested {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        #[arg(long)]
        seeds: Option<usize>,
        /// Bankruptcy time index.
        #[arg(long)]
        kb: Option<usize>,
        /// Horizon (time steps).
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        players: Option<usize>,
        #[arg(long)]
        coalition: Option<usize>,
        /// Phase-game coupling gain.
        #[arg(long)]
        coupling: Option<f64>,
        /// Instrumented coalition sizes (comma separated).
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Phase-oscillator trajectory.
    Kuramoto {
        #[command(flatten)]
        common: Common,
        /// Number of oscillators.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        coupling: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Gaussian phase-noise intensity.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Simplex clustering of a seeded mixture.
    Fuzzy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        clusters: Option<usize>,
        /// Simplex dimension of the generated data.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        fuzzifier: Option<f64>,
        /// Data CSV with one simplex point per row.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Capability coverage table.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let file_cfg = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => FileConfig::default(),
    };

    match run(cli.command, &file_cfg) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                infogame_core::Error::Parse(_) | infogame_core::Error::Config(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(command: Command, cfg: &FileConfig) -> infogame_core::Result<Vec<PathBuf>> {
    let manifest = match command {
        Command::Funnel {
            common,
            alpha,
            seeds,
            samples,
        } => {
            let opts = FunnelOptions {
                out: cfg.get("out", common.out, PathBuf::from("runs/funnel"))?,
                seed: cfg.get("seed", common.seed, 0)?,
                seeds: cfg.get("seeds", seeds, 50)?,
                alphas: cfg.get_list("alpha", alpha, vec![1.0, 0.8, 0.6])?,
                tol: cfg.get("tol", common.tol, 1e-6)?,
                max_iter: cfg.get("max_iter", common.max_iter, 20_000)?,
                sample_n: samples,
            };
            run_funnel(&opts)?
        }
        Command::Mfg {
            common,
            alpha,
            seeds,
            grid,
        } => {
            let opts = MfgOptions {
                out: cfg.get("out", common.out, PathBuf::from("runs/mfg"))?,
                seed: cfg.get("seed", common.seed, 0)?,
                seeds: cfg.get("seeds", seeds, 20)?,
                alphas: cfg.get_list("alpha", alpha, vec![1.0, 0.8, 0.6])?,
                cells: cfg.get("grid", grid, 21)?,
                tol: cfg.get("tol", common.tol, 2e-3)?,
                max_sweeps: cfg.get("max_iter", common.max_iter, 300)?,
            };
            run_mfg(&opts)?
        }
        Command::Bankruptcy {
            common,
            estate,
            claims,
            instance,
        } => {
            let opts = BankruptcyOptions {
                out: cfg.get("out", common.out, PathBuf::from("runs/bankruptcy"))?,
                estate: cfg.get("estate", estate, 100.0)?,
                claims: cfg.get_list("claims", claims, vec![60.0, 80.0])?,
                instance,
            };
            run_bankruptcy(&opts)?
        }
        Command::Nested {
            common,
            lambda,
            seeds,
            kb,
            horizon,
            players,
            coalition,
            coupling,
            sizes,
        } => {
            let opts = NestedOptions {
                out: cfg.get("out", common.out, PathBuf::from("runs/nested"))?,
                seed: cfg.get("seed", common.seed, 0)?,
                seeds: cfg.get("seeds", seeds, 50)?,
                lambdas: cfg.get_list("lambda", lambda, vec![0.1, 0.3, 0.5])?,
                k_b: cfg.get("kb", kb, 6)?,
                horizon: cfg.get("horizon", horizon, 60)?,
                players: cfg.get("players", players, 9)?,
                coalition: cfg.get("coalition", coalition, 5)?,
                tol: cfg.get("tol", common.tol, 5e-3)?,
                max_iter: cfg.get("max_iter", common.max_iter, 400)?,
                coupling: cfg.get("coupling", coupling, 1.5)?,
                sizes: cfg.get_list("sizes", sizes, vec![4, 8, 16, 32, 64])?,
            };
            run_nested(&opts)?
        }
        Command::Kuramoto {
            common,
            n,
            coupling,
            dt,
            steps,
            noise,
        } => {
            let opts = KuramotoOptions {
                out: cfg.get("out", common.out, PathBuf::from("runs/kuramoto"))?,
                seed: cfg.get("seed", common.seed, 0)?,
                n: cfg.get("n", n, 8)?,
                coupling: cfg.get("coupling", coupling, 1.5)?,
                dt: cfg.get("dt", dt, 0.01)?,
                steps: cfg.get("steps", steps, 2000)?,
                noise: cfg.get("noise", noise, 0.0)?,
            };
            run_kuramoto(&opts)?
        }
        Command::Fuzzy {
            common,
            points,
            clusters,
            dim,
            fuzzifier,
            data,
        } => {
            let opts = FuzzyOptions {
                out: cfg.get("out", common.out, PathBuf::from("runs/fuzzy"))?,
                seed: cfg.get("seed", common.seed, 0)?,
                points: cfg.get("points", points, 30)?,
                clusters: cfg.get("clusters", clusters, 3)?,
                dim: cfg.get("dim", dim, 4)?,
                fuzzifier: cfg.get("fuzzifier", fuzzifier, 2.0)?,
                tol: cfg.get("tol", common.tol, 1e-9)?,
                max_iter: cfg.get("max_iter", common.max_iter, 500)?,
                data,
            };
            run_fuzzy(&opts)?
        }
        Command::Report { common } => {
            let out = cfg.get("out", common.out, PathBuf::from("runs/report"))?;
            pipelines::run_report(&out)?
        }
    };
    Ok(manifest.files().to_vec())
}

//! clap argument surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netlasso::nonconvex::PhiLog;
use netlasso::path::{PathConfig, PathMode};
use netlasso::solver::SolverConfig;

#[derive(Debug, Parser)]
#[command(
    name = "netlasso",
    about = "Graph-structured optimization with edge-difference (network lasso) penalties",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance at a fixed lambda.
    Solve(SolveArgs),
    /// Sweep the regularization path from lambda = 0 to consensus.
    Path(PathArgs),
    /// Predict a held-out node from solved neighbor values.
    Infer(InferArgs),
    /// Run one of the built-in experiment pipelines.
    Experiment(ExperimentArgs),
    /// Scaling benchmark on random regular graphs with quadratic costs.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// ADMM penalty parameter.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Absolute stopping tolerance.
    #[arg(long, default_value_t = 1e-4)]
    pub eps_abs: f64,
    /// Relative stopping tolerance.
    #[arg(long, default_value_t = 1e-3)]
    pub eps_rel: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Tolerance for iterative per-node prox solves.
    #[arg(long, default_value_t = 1e-6)]
    pub tol_prox: f64,
    /// Worker threads (0 = all cores). Falls back to NETLASSO_WORKERS.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Fixed-order reductions and zeroed timing fields: bit-identical reruns.
    #[arg(long, default_value_t = false)]
    pub deterministic: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SolverFlags {
    pub fn solver_config(&self) -> SolverConfig {
        let workers = self.workers.unwrap_or_else(|| {
            std::env::var("NETLASSO_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(0)
        });
        SolverConfig {
            rho: self.rho,
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            max_iter: self.max_iter,
            tol_prox: self.tol_prox,
            workers,
            deterministic: self.deterministic,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PathFlags {
    /// Geometric multiplier between consecutive lambdas.
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// First non-zero lambda; estimated from sampled edge gradients if unset.
    #[arg(long = "lambda-init")]
    pub lambda_init: Option<f64>,
    /// Relative solution-change tolerance ending the path.
    #[arg(long, default_value_t = 1e-6)]
    pub eps_path: f64,
    #[arg(long, default_value_t = 50)]
    pub max_lambdas: usize,
    /// Edges sampled by the initial-lambda heuristic.
    #[arg(long, default_value_t = 5)]
    pub heuristic_samples: usize,
    #[arg(long, value_enum, default_value_t = Mode::Convex)]
    pub mode: Mode,
    /// Sweeps per lambda in nonconvex mode.
    #[arg(long, default_value_t = 500)]
    pub fixed_iters: usize,
    /// Scale of the log penalty in nonconvex mode.
    #[arg(long, default_value_t = 1.0)]
    pub eps_log: f64,
}

impl PathFlags {
    pub fn path_config(&self, seed: u64) -> PathConfig {
        PathConfig {
            alpha: self.alpha,
            lambda_initial: self.lambda_init,
            eps_path: self.eps_path,
            max_lambdas: self.max_lambdas,
            heuristic_samples: self.heuristic_samples,
            seed,
        }
    }

    pub fn path_mode(&self) -> PathMode {
        match self.mode {
            Mode::Convex => PathMode::Convex,
            Mode::Nonconvex => PathMode::Nonconvex {
                fixed_iters: self.fixed_iters,
                phi: PhiLog::new(self.eps_log),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Convex,
    Nonconvex,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Convex => write!(f, "convex"),
            Mode::Nonconvex => write!(f, "nonconvex"),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Edge-list file (`NODES m DIM p` header, then `j<TAB>k<TAB>w` lines).
    #[arg(long)]
    pub graph: PathBuf,
    /// JSON file with one node objective per graph node.
    #[arg(long)]
    pub objectives: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    /// Write a per-iteration trace CSV.
    #[arg(long, default_value_t = false)]
    pub trace: bool,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub objectives: PathBuf,
    /// Also emit a tidy (lambda, metric) CSV for plotting.
    #[arg(long, default_value_t = false)]
    pub plot_data: bool,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub path: PathFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Node-solutions CSV (one row per node) from a previous solve.
    #[arg(long)]
    pub x: PathBuf,
    /// Neighbor list file: one `node_id<TAB>weight` line per neighbor.
    #[arg(long)]
    pub neighbors: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Timing suppression and reproducible output, as elsewhere.
    #[arg(long, default_value_t = false)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(subcommand)]
    pub which: ExperimentCommand,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Networked binary classification on the synthetic group benchmark.
    Svm(SvmExperimentArgs),
    /// Housing-price regression on a geographic kNN graph.
    Housing(HousingExperimentArgs),
    /// Event detection in periodic count series vs. a Poisson baseline.
    Events(EventsExperimentArgs),
}

#[derive(Debug, Args)]
pub struct SvmExperimentArgs {
    #[arg(long, default_value_t = 1000)]
    pub nodes: usize,
    #[arg(long, default_value_t = 20)]
    pub groups: usize,
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    #[arg(long, default_value_t = 25)]
    pub train_per_node: usize,
    #[arg(long, default_value_t = 10)]
    pub test_per_node: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p_intra: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_inter: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// Hinge slack penalty of the per-node SVMs.
    #[arg(long = "svm-c", default_value_t = 0.75)]
    pub svm_c: f64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub path: PathFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct HousingExperimentArgs {
    /// Sales CSV with latitude, longitude, beds, baths, sq__ft, price.
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub test_count: usize,
    /// Neighbors per node in the geographic graph.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Ridge weight on the regression coefficients.
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub path: PathFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct EventsExperimentArgs {
    /// 30-minute entry/exit count CSV (`flow,date,time,count`).
    #[arg(long)]
    pub counts: Option<PathBuf>,
    /// Truth-event CSV (start/end timestamps).
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Generate a seeded synthetic series instead of loading files.
    #[arg(long, default_value_t = false)]
    pub synthetic: bool,
    #[arg(long, default_value_t = 15)]
    pub weeks: usize,
    #[arg(long, default_value_t = 30)]
    pub n_events: usize,
    /// Fixed edge parameter while mu is swept.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// Geometric mu grid: start, factor, count.
    #[arg(long, default_value_t = 0.05)]
    pub mu_start: f64,
    #[arg(long, default_value_t = 1.5)]
    pub mu_factor: f64,
    #[arg(long, default_value_t = 16)]
    pub mu_count: usize,
    /// Geometric epsilon grid for the Poisson baseline: start, factor, count.
    #[arg(long, default_value_t = 1e-12)]
    pub eps_start: f64,
    #[arg(long, default_value_t = 3.0)]
    pub eps_factor: f64,
    #[arg(long, default_value_t = 24)]
    pub eps_count: usize,
    /// Minimum run length that counts as an event.
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    /// Sweeps per mu in the nonconvex column.
    #[arg(long, default_value_t = 200)]
    pub fixed_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eps_log: f64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Node count of each generated regular graph.
    #[arg(long, default_value_t = 2000)]
    pub nodes: usize,
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    /// Comma-separated per-node dimensions; unknowns = nodes * dim.
    #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
    pub dims: Vec<usize>,
    /// Doublings of the heuristic initial lambda to reach mid-path.
    #[arg(long, default_value_t = 6)]
    pub lambda_doublings: u32,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
}

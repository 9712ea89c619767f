//! Networked-classification experiment: per-node SVMs coupled by the graph,
//! accuracy measured over the held-out examples along both regularization
//! paths. The path endpoints double as the baselines — lambda = 0 is the
//! purely local SVM, the consensus endpoint is one global SVM for the whole
//! network.

use serde::Serialize;

use crate::error::CliError;
use netlasso::datasets::{gen_svm_benchmark, svm_accuracy, SvmBenchmark, SvmBenchmarkSpec};
use netlasso::nonconvex::PhiLog;
use netlasso::path::{solve_path, PathConfig, PathMode, PathResult};
use netlasso::solver::SolverConfig;

#[derive(Debug, Clone)]
pub struct SvmConfig {
    pub spec: SvmBenchmarkSpec,
    pub solver: SolverConfig,
    pub path: PathConfig,
    pub nonconvex_fixed_iters: usize,
    pub nonconvex_eps_log: f64,
    /// Skip the nonconvex sweep entirely when false.
    pub run_nonconvex: bool,
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub accuracy: f64,
    pub n_clusters: usize,
    pub iterations: usize,
    pub objective: f64,
}

#[derive(Debug, Serialize)]
pub struct SvmOutcome {
    pub nodes: usize,
    pub groups: usize,
    pub edges: usize,
    pub expected_edges: f64,
    pub inter_group_edge_fraction: f64,
    pub slack_penalty: f64,
    pub seed: u64,
    /// Accuracy of the lambda = 0 (purely local) point.
    pub local_accuracy: f64,
    /// Accuracy at the consensus endpoint (one shared hyperplane).
    pub global_accuracy: f64,
    pub reached_consensus: bool,
    pub convex: Vec<CurvePoint>,
    pub convex_peak_lambda: f64,
    pub convex_peak_accuracy: f64,
    pub nonconvex: Vec<CurvePoint>,
    pub nonconvex_peak_lambda: f64,
    pub nonconvex_peak_accuracy: f64,
}

fn curve(bench: &SvmBenchmark, path: &PathResult) -> Vec<CurvePoint> {
    path.points
        .iter()
        .map(|p| CurvePoint {
            lambda: p.lambda,
            accuracy: svm_accuracy(bench, p.result.x()),
            n_clusters: p.n_clusters,
            iterations: p.result.iterations,
            objective: p.result.objective,
        })
        .collect()
}

fn peak(curve: &[CurvePoint]) -> (f64, f64) {
    curve
        .iter()
        .map(|p| (p.lambda, p.accuracy))
        .fold((0.0, 0.0), |best, cand| if cand.1 > best.1 { cand } else { best })
}

pub fn run_svm_experiment(cfg: &SvmConfig) -> Result<SvmOutcome, CliError> {
    let bench = gen_svm_benchmark(&cfg.spec)?;
    let convex_path = solve_path(&bench.graph, &cfg.solver, &cfg.path, &PathMode::Convex)?;
    let convex = curve(&bench, &convex_path);

    let nonconvex = if cfg.run_nonconvex {
        let mode = PathMode::Nonconvex {
            fixed_iters: cfg.nonconvex_fixed_iters,
            phi: PhiLog::new(cfg.nonconvex_eps_log),
        };
        let path = solve_path(&bench.graph, &cfg.solver, &cfg.path, &mode)?;
        curve(&bench, &path)
    } else {
        Vec::new()
    };

    let (convex_peak_lambda, convex_peak_accuracy) = peak(&convex);
    let (nonconvex_peak_lambda, nonconvex_peak_accuracy) = peak(&nonconvex);
    let outcome = SvmOutcome {
        nodes: cfg.spec.n_nodes,
        groups: cfg.spec.n_groups,
        edges: bench.graph.edge_count(),
        expected_edges: cfg.spec.expected_edges(),
        inter_group_edge_fraction: bench.inter_group_edge_fraction,
        slack_penalty: cfg.spec.slack_penalty,
        seed: cfg.spec.seed,
        local_accuracy: convex[0].accuracy,
        global_accuracy: convex.last().expect("path nonempty").accuracy,
        reached_consensus: convex_path.lambda_critical_est.is_some(),
        convex_peak_lambda,
        convex_peak_accuracy,
        convex,
        nonconvex_peak_lambda,
        nonconvex_peak_accuracy,
        nonconvex,
    };
    Ok(outcome)
}

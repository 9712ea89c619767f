//! Regularization-path driver: solve at `lambda = 0`, estimate the first
//! non-zero `lambda` from sampled edge gradients, then sweep a geometric
//! grid with warm starts until the solution stops changing or every edge is
//! in consensus (the overestimate of the critical lambda).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{ProblemGraph, VectorList};
use crate::nonconvex::{solve_nonconvex, NonconvexConfig, PhiLog};
use crate::solver::{
    cluster_count, extract_clusters, solve, SolverConfig, SolverError, SolverResult,
};
use crate::vecmath::{dist, norm};

#[derive(Debug, Clone)]
pub struct PathConfig {
    /// Geometric multiplier between consecutive lambdas.
    pub alpha: f64,
    /// Overrides the sampled-gradient heuristic when set.
    pub lambda_initial: Option<f64>,
    /// Relative solution-change tolerance for the stopping rule, also used
    /// for the pairwise deviation check in consensus detection.
    pub eps_path: f64,
    /// Cap on the number of path points (including `lambda = 0`).
    pub max_lambdas: usize,
    /// Edges sampled by the initial-lambda heuristic.
    pub heuristic_samples: usize,
    /// Seed for the heuristic's edge sampling.
    pub seed: u64,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            alpha: 2.0,
            lambda_initial: None,
            eps_path: 1e-6,
            max_lambdas: 50,
            heuristic_samples: 5,
            seed: 0,
        }
    }
}

/// Which solver the path points use.
#[derive(Debug, Clone)]
pub enum PathMode {
    Convex,
    Nonconvex { fixed_iters: usize, phi: PhiLog },
}

#[derive(Debug, Clone)]
pub struct PathPoint {
    pub lambda: f64,
    pub result: SolverResult,
    /// Cluster id per node from the consensus-flagged edges.
    pub clusters: Vec<usize>,
    pub n_clusters: usize,
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub points: Vec<PathPoint>,
    /// First lambda at which consensus was detected or the solution stopped
    /// changing; `None` when the sweep hit `max_lambdas` first.
    pub lambda_critical_est: Option<f64>,
    /// Mean node solution when global consensus was reached.
    pub consensus_x: Option<Vec<f64>>,
    /// Per-lambda notes: heuristic fallback, solve failures, etc.
    pub diagnostics: Vec<String>,
}

impl PathResult {
    pub fn final_point(&self) -> &PathPoint {
        self.points.last().expect("path always has the lambda=0 point")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LambdaInitial {
    pub value: f64,
    /// True when every sampled edge gave a degenerate candidate and the
    /// fixed default was used instead.
    pub used_fallback: bool,
}

const LAMBDA_FALLBACK: f64 = 1e-3;

/// Estimates the first non-zero lambda of the path: for each sampled edge
/// `(j, k)`, evaluate the node gradients at the midpoint of the lambda = 0
/// solutions and form `0.01 * (||grad f_j|| + ||grad f_k||) / (2 w_jk)`;
/// the smallest positive candidate wins.
pub fn lambda_initial_heuristic(
    g: &ProblemGraph,
    x0: &VectorList,
    samples: usize,
    seed: u64,
) -> LambdaInitial {
    let n = g.edge_count();
    if n == 0 || samples == 0 {
        return LambdaInitial { value: LAMBDA_FALLBACK, used_fallback: true };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, n, samples.min(n));
    let p = g.dim();
    let mut midpoint = vec![0.0; p];
    let mut grad = vec![0.0; p];
    let mut best: Option<f64> = None;
    for e in picks {
        let edge = g.edge(e);
        let (xl, xh) = (x0.row(edge.lo), x0.row(edge.hi));
        for t in 0..p {
            midpoint[t] = 0.5 * (xl[t] + xh[t]);
        }
        g.objective(edge.lo).gradient(&midpoint, &mut grad);
        let gl = norm(&grad);
        g.objective(edge.hi).gradient(&midpoint, &mut grad);
        let gh = norm(&grad);
        let candidate = 0.01 * (gl + gh) / (2.0 * edge.weight);
        if candidate.is_finite() && candidate > 0.0 {
            best = Some(best.map_or(candidate, |b: f64| b.min(candidate)));
        }
    }
    match best {
        Some(value) => LambdaInitial { value, used_fallback: false },
        None => LambdaInitial { value: LAMBDA_FALLBACK, used_fallback: true },
    }
}

/// True iff every edge's final z-update clamped to consensus and the largest
/// per-edge node deviation is below `eps_path` (relative to the solution
/// scale).
pub fn detect_consensus(g: &ProblemGraph, result: &SolverResult, eps_path: f64) -> bool {
    if !result.consensus_edges.iter().all(|&f| f) {
        return false;
    }
    let x = result.x();
    let scale = (0..g.node_count())
        .map(|i| norm(x.row(i)))
        .fold(0.0f64, f64::max)
        .max(1.0);
    g.edges()
        .iter()
        .all(|e| dist(x.row(e.lo), x.row(e.hi)) <= eps_path * scale)
}

fn solve_mode(
    g: &ProblemGraph,
    lambda: f64,
    cfg: &SolverConfig,
    mode: &PathMode,
    warm: Option<&crate::solver::SolverState>,
) -> Result<SolverResult, SolverError> {
    match mode {
        PathMode::Convex => solve(g, lambda, cfg, warm),
        PathMode::Nonconvex { fixed_iters, phi } => {
            let ncfg = NonconvexConfig { base: cfg.clone(), fixed_iters: *fixed_iters, phi: *phi };
            solve_nonconvex(g, lambda, &ncfg, warm)
        }
    }
}

/// Sweeps the regularization path from `lambda = 0` upward. Each non-zero
/// lambda warm-starts from the previous solve; a per-lambda failure is
/// recorded and the next lambda restarts cold.
pub fn solve_path(
    g: &ProblemGraph,
    cfg: &SolverConfig,
    pcfg: &PathConfig,
    mode: &PathMode,
) -> Result<PathResult, SolverError> {
    if !(pcfg.alpha > 1.0) {
        return Err(SolverError::BadConfig(format!(
            "path multiplier alpha must be > 1, got {}",
            pcfg.alpha
        )));
    }
    if pcfg.max_lambdas < 2 {
        return Err(SolverError::BadConfig("max_lambdas must be >= 2".to_string()));
    }
    let mut diagnostics = Vec::new();
    let base = solve_mode(g, 0.0, cfg, mode, None)?;
    let lambda_init = match pcfg.lambda_initial {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(v) => return Err(SolverError::BadLambda(v)),
        None => {
            let est = lambda_initial_heuristic(g, base.x(), pcfg.heuristic_samples, pcfg.seed);
            if est.used_fallback {
                diagnostics.push(format!(
                    "lambda_initial heuristic degenerate; using fallback {LAMBDA_FALLBACK}"
                ));
            }
            est.value
        }
    };

    let clusters = extract_clusters(g, &base);
    let n_clusters = cluster_count(&clusters);
    let mut points = vec![PathPoint { lambda: 0.0, result: base, clusters, n_clusters }];
    let mut lambda = lambda_init;
    let mut lambda_critical_est = None;
    let mut consensus_x = None;
    let mut warm_ok = true;

    while points.len() < pcfg.max_lambdas {
        let warm = if warm_ok {
            Some(&points.last().unwrap().result.state)
        } else {
            None
        };
        let result = match solve_mode(g, lambda, cfg, mode, warm) {
            Ok(r) => r,
            Err(err) => {
                diagnostics.push(format!("lambda {lambda:.6e}: solve failed: {err}"));
                warm_ok = false;
                lambda *= pcfg.alpha;
                continue;
            }
        };
        warm_ok = true;
        let clusters = extract_clusters(g, &result);
        let n_clusters = cluster_count(&clusters);

        let prev_x = points.last().unwrap().result.x();
        let mut change2 = 0.0;
        let mut prev2 = 0.0;
        for i in 0..g.node_count() {
            change2 += dist(result.x().row(i), prev_x.row(i)).powi(2);
            prev2 += norm(prev_x.row(i)).powi(2);
        }
        let rel_change = change2.sqrt() / prev2.sqrt().max(1.0);
        let in_consensus = detect_consensus(g, &result, pcfg.eps_path);

        points.push(PathPoint { lambda, result, clusters, n_clusters });

        if in_consensus || rel_change < pcfg.eps_path {
            lambda_critical_est = Some(lambda);
            if in_consensus {
                let x = points.last().unwrap().result.x();
                let p = g.dim();
                let mut mean = vec![0.0; p];
                for i in 0..g.node_count() {
                    for t in 0..p {
                        mean[t] += x.row(i)[t];
                    }
                }
                for v in mean.iter_mut() {
                    *v /= g.node_count() as f64;
                }
                consensus_x = Some(mean);
            }
            break;
        }
        lambda *= pcfg.alpha;
    }

    Ok(PathResult { points, lambda_critical_est, consensus_x, diagnostics })
}

//! The convex network-lasso solver: bulk-synchronous x/z/u sweeps with the
//! closed-form per-edge z-update and residual-based stopping.
//!
//! Per iteration, phase one updates every node variable in parallel (one
//! scaled prox call each, reading the edge copies read-only); phase two
//! updates every edge's two copies and two scaled duals in parallel (reading
//! the node variables read-only); a reduction then forms the primal/dual
//! residual norms and the objective. No two workers ever write the same
//! record, and with `deterministic` reductions all sums are folded in fixed
//! index order, making the result bitwise independent of the worker count.

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{ProblemGraph, VectorList};
use crate::objectives::ProxError;
use crate::vecmath::dist;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// ADMM penalty parameter `rho`.
    pub rho: f64,
    /// Absolute tolerance of the residual stopping rule.
    pub eps_abs: f64,
    /// Relative tolerance of the residual stopping rule.
    pub eps_rel: f64,
    pub max_iter: usize,
    /// Tolerance handed to iterative prox implementations.
    pub tol_prox: f64,
    /// Worker threads for the sweeps; 0 uses the ambient rayon pool.
    pub workers: usize,
    /// Fold reductions in fixed index order (bitwise reproducible).
    pub deterministic: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 1.0,
            eps_abs: 1e-4,
            eps_rel: 1e-3,
            max_iter: 1000,
            tol_prox: 1e-6,
            workers: 0,
            deterministic: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), SolverError> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(SolverError::BadConfig(format!("rho must be > 0, got {}", self.rho)));
        }
        if self.eps_abs <= 0.0 || self.eps_rel <= 0.0 || self.tol_prox <= 0.0 {
            return Err(SolverError::BadConfig(
                "tolerances must be positive".to_string(),
            ));
        }
        if self.max_iter == 0 {
            return Err(SolverError::BadConfig("max_iter must be >= 1".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("lambda must be finite and >= 0, got {0}")]
    BadLambda(f64),
    #[error("prox failed at node {node}: {source}")]
    Prox {
        node: usize,
        #[source]
        source: ProxError,
    },
    #[error("objective not finite at the final iterate ({objective}); problem infeasible")]
    Infeasible { objective: f64 },
    #[error("warm-start state does not match the graph dimensions")]
    WarmStartMismatch,
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

/// Full ADMM iterate: node variables plus per-edge copies and scaled duals.
///
/// For edge `(j, k)` with `j < k`, row `e` of `z_lo`/`u_lo` is the copy/dual
/// held at the lower endpoint `j` and `z_hi`/`u_hi` at the higher endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: VectorList,
    pub z_lo: VectorList,
    pub z_hi: VectorList,
    pub u_lo: VectorList,
    pub u_hi: VectorList,
}

impl SolverState {
    pub fn zeros(g: &ProblemGraph) -> Self {
        let p = g.dim();
        SolverState {
            x: VectorList::zeros(g.node_count(), p),
            z_lo: VectorList::zeros(g.edge_count(), p),
            z_hi: VectorList::zeros(g.edge_count(), p),
            u_lo: VectorList::zeros(g.edge_count(), p),
            u_hi: VectorList::zeros(g.edge_count(), p),
        }
    }

    fn matches(&self, g: &ProblemGraph) -> bool {
        self.x.dim() == g.dim()
            && self.x.count() == g.node_count()
            && self.z_lo.count() == g.edge_count()
            && self.z_hi.count() == g.edge_count()
            && self.u_lo.count() == g.edge_count()
            && self.u_hi.count() == g.edge_count()
    }
}

/// Outcome of one closed-form edge update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeUpdateResult {
    /// Interpolation coefficient, clamped to `[0.5, 1]`.
    pub theta: f64,
    /// True iff the clamp was active (the edge is in consensus).
    pub consensus: bool,
}

/// The interpolation coefficient `theta = max(1 - c / (rho * d), 0.5)` of
/// the closed-form z-update, with `d = 0` resolved to the consensus branch
/// (the two branches coincide in that limit).
pub fn theta_convex(d: f64, penalty: f64, rho: f64) -> EdgeUpdateResult {
    if d <= 0.0 {
        return EdgeUpdateResult { theta: 0.5, consensus: true };
    }
    let raw = 1.0 - penalty / (rho * d);
    if raw <= 0.5 {
        EdgeUpdateResult { theta: 0.5, consensus: true }
    } else {
        EdgeUpdateResult { theta: raw, consensus: false }
    }
}

/// Jointly updates the two copies of one edge:
/// `z_lo = theta * a + (1 - theta) * b`, `z_hi = (1 - theta) * a + theta * b`
/// with `a = x_j + u_jk`, `b = x_k + u_kj` and `penalty = lambda * w_jk`.
pub fn z_update(
    a: &[f64],
    b: &[f64],
    penalty: f64,
    rho: f64,
    z_lo: &mut [f64],
    z_hi: &mut [f64],
) -> EdgeUpdateResult {
    let upd = theta_convex(dist(a, b), penalty, rho);
    let (t, s) = (upd.theta, 1.0 - upd.theta);
    for i in 0..a.len() {
        z_lo[i] = t * a[i] + s * b[i];
        z_hi[i] = s * a[i] + t * b[i];
    }
    upd
}

/// Scaled dual ascent for one directed copy: `u += x - z`.
pub fn u_update(x: &[f64], z: &[f64], u: &mut [f64]) {
    for i in 0..x.len() {
        u[i] += x[i] - z[i];
    }
}

/// Per-iteration residual norms and their stopping thresholds.
#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    pub r_norm: f64,
    pub s_norm: f64,
    pub eps_pri: f64,
    pub eps_dual: f64,
}

impl Residuals {
    pub fn converged(&self) -> bool {
        self.r_norm <= self.eps_pri && self.s_norm <= self.eps_dual
    }
}

/// Sums `f(i)` for `i` in `0..count`. Deterministic mode materializes the
/// per-item values and folds them in index order; otherwise a parallel tree
/// reduction is used (which may drift by rounding).
pub(crate) fn reduce_sum<const K: usize>(
    count: usize,
    deterministic: bool,
    f: impl Fn(usize) -> [f64; K] + Sync + Send,
) -> [f64; K] {
    let add = |mut a: [f64; K], b: [f64; K]| {
        for i in 0..K {
            a[i] += b[i];
        }
        a
    };
    if deterministic {
        let buf: Vec<[f64; K]> = (0..count).into_par_iter().map(f).collect();
        buf.into_iter().fold([0.0; K], add)
    } else {
        (0..count)
            .into_par_iter()
            .map(f)
            .reduce(|| [0.0; K], add)
    }
}

/// Phase one: updates every node variable via its scaled prox,
/// `x_i = prox_i(mean_j(z_ij - u_ij), rho * deg(i))`; isolated nodes get the
/// unconstrained minimizer of their objective.
pub fn x_update(
    g: &ProblemGraph,
    state: &mut SolverState,
    cfg: &SolverConfig,
) -> Result<(), SolverError> {
    let p = g.dim();
    let SolverState { x, z_lo, z_hi, u_lo, u_hi } = state;
    x.as_mut_slice()
        .par_chunks_mut(p)
        .enumerate()
        .try_for_each(|(i, xi)| {
            let deg = g.degree(i);
            let wrap = |source: ProxError| SolverError::Prox { node: i, source };
            if deg == 0 {
                return g.objective(i).minimize(cfg.tol_prox, xi).map_err(wrap);
            }
            let mut anchor = vec![0.0; p];
            for (nbr, _, e) in g.neighbors(i) {
                let (z, u) = if i < nbr {
                    (z_lo.row(e), u_lo.row(e))
                } else {
                    (z_hi.row(e), u_hi.row(e))
                };
                for t in 0..p {
                    anchor[t] += z[t] - u[t];
                }
            }
            let inv = 1.0 / deg as f64;
            for a in anchor.iter_mut() {
                *a *= inv;
            }
            let sigma = cfg.rho * deg as f64;
            g.objective(i)
                .prox(&anchor, sigma, cfg.tol_prox, xi)
                .map_err(wrap)
        })
}

/// Phase two: updates all edge copies and duals. `weight_on_own_side` maps
/// `(d, lambda * w)` to the interpolation weight each copy puts on its own
/// side (in `[0.5, 1]`) plus the consensus flag; the convex rule is
/// [`theta_convex`], the concave-penalty rule lives in [`crate::nonconvex`].
pub(crate) fn edge_sweep(
    g: &ProblemGraph,
    state: &mut SolverState,
    lambda: f64,
    consensus: &mut [bool],
    weight_on_own_side: impl Fn(f64, f64) -> (f64, bool) + Sync,
) {
    let p = g.dim();
    let SolverState { x, z_lo, z_hi, u_lo, u_hi } = state;
    let x = &*x;
    z_lo.as_mut_slice()
        .par_chunks_mut(p)
        .zip(z_hi.as_mut_slice().par_chunks_mut(p))
        .zip(u_lo.as_mut_slice().par_chunks_mut(p))
        .zip(u_hi.as_mut_slice().par_chunks_mut(p))
        .zip(consensus.par_iter_mut())
        .enumerate()
        .for_each(|(e, ((((zl, zh), ul), uh), flag))| {
            let edge = g.edge(e);
            let xl = x.row(edge.lo);
            let xh = x.row(edge.hi);
            let mut d2 = 0.0;
            for t in 0..p {
                let diff = (xl[t] + ul[t]) - (xh[t] + uh[t]);
                d2 += diff * diff;
            }
            let (w_own, in_consensus) = weight_on_own_side(d2.sqrt(), lambda * edge.weight);
            *flag = in_consensus;
            let w_other = 1.0 - w_own;
            for t in 0..p {
                let a = xl[t] + ul[t];
                let b = xh[t] + uh[t];
                zl[t] = w_own * a + w_other * b;
                zh[t] = w_other * a + w_own * b;
            }
            u_update(xl, zl, ul);
            u_update(xh, zh, uh);
        });
}

/// Primal/dual residual norms over the `2n` directed copies, with the
/// standard absolute-plus-relative stopping thresholds.
pub fn residuals(
    g: &ProblemGraph,
    state: &SolverState,
    z_prev_lo: &VectorList,
    z_prev_hi: &VectorList,
    cfg: &SolverConfig,
) -> Residuals {
    let n = g.edge_count();
    let p = g.dim();
    // [r^2, dz^2, |x copies|^2, |z|^2, |u|^2]
    let sums = reduce_sum::<5>(n, cfg.deterministic, |e| {
        let edge = g.edge(e);
        let xl = state.x.row(edge.lo);
        let xh = state.x.row(edge.hi);
        let (zl, zh) = (state.z_lo.row(e), state.z_hi.row(e));
        let (ul, uh) = (state.u_lo.row(e), state.u_hi.row(e));
        let (pl, ph) = (z_prev_lo.row(e), z_prev_hi.row(e));
        let mut acc = [0.0; 5];
        for t in 0..p {
            let (rl, rh) = (xl[t] - zl[t], xh[t] - zh[t]);
            acc[0] += rl * rl + rh * rh;
            let (dl, dh) = (zl[t] - pl[t], zh[t] - ph[t]);
            acc[1] += dl * dl + dh * dh;
            acc[2] += xl[t] * xl[t] + xh[t] * xh[t];
            acc[3] += zl[t] * zl[t] + zh[t] * zh[t];
            acc[4] += ul[t] * ul[t] + uh[t] * uh[t];
        }
        acc
    });
    let scale = ((2 * n * p) as f64).sqrt() * cfg.eps_abs;
    Residuals {
        r_norm: sums[0].sqrt(),
        s_norm: cfg.rho * sums[1].sqrt(),
        eps_pri: scale + cfg.eps_rel * sums[2].sqrt().max(sums[3].sqrt()),
        eps_dual: scale + cfg.eps_rel * cfg.rho * sums[4].sqrt(),
    }
}

/// Sum of the node objectives at `x`.
pub fn node_objective_sum(g: &ProblemGraph, x: &VectorList, deterministic: bool) -> f64 {
    reduce_sum::<1>(g.node_count(), deterministic, |i| {
        [g.objective(i).evaluate(x.row(i))]
    })[0]
}

/// `lambda * sum_e w_e * phi(||x_j - x_k||)`; the convex penalty is
/// `phi = identity`.
pub fn edge_penalty_sum(
    g: &ProblemGraph,
    x: &VectorList,
    lambda: f64,
    deterministic: bool,
    phi: impl Fn(f64) -> f64 + Sync,
) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    lambda
        * reduce_sum::<1>(g.edge_count(), deterministic, |e| {
            let edge = g.edge(e);
            [edge.weight * phi(dist(x.row(edge.lo), x.row(edge.hi)))]
        })[0]
}

/// The network-lasso objective at `x` (node costs plus the weighted sum of
/// edge-difference norms).
pub fn network_objective(g: &ProblemGraph, x: &VectorList, lambda: f64, deterministic: bool) -> f64 {
    node_objective_sum(g, x, deterministic) + edge_penalty_sum(g, x, lambda, deterministic, |d| d)
}

/// Result of one solve. `state` is the iterate to warm-start the next solve
/// from; for the convex solver it is the final iterate and `x()` is the
/// solution.
#[derive(Debug, Clone)]
pub struct SolverResult {
    pub iterations: usize,
    pub converged: bool,
    /// Objective value at the reported solution.
    pub objective: f64,
    pub primal_residuals: Vec<f64>,
    pub dual_residuals: Vec<f64>,
    /// Objective value after each iteration.
    pub objective_trace: Vec<f64>,
    /// Per-edge flag: the final z-update clamped this edge to consensus.
    pub consensus_edges: Vec<bool>,
    /// Iteration that produced the reported solution (concave-penalty solver
    /// only; the convex solver always reports the last iterate).
    pub best_iter: Option<usize>,
    pub state: SolverState,
}

impl SolverResult {
    /// Node solutions, one row per node.
    pub fn x(&self) -> &VectorList {
        &self.state.x
    }
}

pub(crate) fn install_pool<T: Send>(
    workers: usize,
    run: impl FnOnce() -> Result<T, SolverError> + Send,
) -> Result<T, SolverError> {
    if workers == 0 {
        run()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| SolverError::Pool(e.to_string()))?;
        pool.install(run)
    }
}

pub(crate) fn init_state(
    g: &ProblemGraph,
    warm: Option<&SolverState>,
) -> Result<SolverState, SolverError> {
    match warm {
        Some(s) if !s.matches(g) => Err(SolverError::WarmStartMismatch),
        Some(s) => Ok(s.clone()),
        None => Ok(SolverState::zeros(g)),
    }
}

/// Runs ADMM on the network-lasso problem until both residual tests pass or
/// `max_iter` is hit. `warm` copies a prior state; otherwise everything
/// starts at zero.
pub fn solve(
    g: &ProblemGraph,
    lambda: f64,
    cfg: &SolverConfig,
    warm: Option<&SolverState>,
) -> Result<SolverResult, SolverError> {
    cfg.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(SolverError::BadLambda(lambda));
    }
    let mut state = init_state(g, warm)?;
    let cfg = cfg.clone();
    install_pool(cfg.workers, move || {
        let n = g.edge_count();
        let mut z_prev_lo = state.z_lo.clone();
        let mut z_prev_hi = state.z_hi.clone();
        let mut consensus = vec![false; n];
        let mut primal = Vec::new();
        let mut dual = Vec::new();
        let mut trace = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        for iter in 1..=cfg.max_iter {
            x_update(g, &mut state, &cfg)?;
            z_prev_lo.copy_from(&state.z_lo);
            z_prev_hi.copy_from(&state.z_hi);
            edge_sweep(g, &mut state, lambda, &mut consensus, |d, pen| {
                let upd = theta_convex(d, pen, cfg.rho);
                (upd.theta, upd.consensus)
            });
            let res = residuals(g, &state, &z_prev_lo, &z_prev_hi, &cfg);
            let objective = network_objective(g, &state.x, lambda, cfg.deterministic);
            primal.push(res.r_norm);
            dual.push(res.s_norm);
            trace.push(objective);
            iterations = iter;
            if res.converged() {
                converged = true;
                break;
            }
        }
        let objective = *trace.last().expect("max_iter >= 1");
        if converged && !objective.is_finite() {
            return Err(SolverError::Infeasible { objective });
        }
        Ok(SolverResult {
            iterations,
            converged,
            objective,
            primal_residuals: primal,
            dual_residuals: dual,
            objective_trace: trace,
            consensus_edges: consensus,
            best_iter: None,
            state,
        })
    })
}

/// Connected components of the subgraph of consensus-flagged edges.
/// Component ids are assigned in order of the smallest member node, so the
/// labels are deterministic.
pub fn extract_clusters(g: &ProblemGraph, result: &SolverResult) -> Vec<usize> {
    clusters_from_flags(g, &result.consensus_edges)
}

pub fn clusters_from_flags(g: &ProblemGraph, consensus: &[bool]) -> Vec<usize> {
    let m = g.node_count();
    let mut label = vec![usize::MAX; m];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..m {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            for (nbr, _, e) in g.neighbors(i) {
                if consensus[e] && label[nbr] == usize::MAX {
                    label[nbr] = next;
                    stack.push(nbr);
                }
            }
        }
        next += 1;
    }
    label
}

/// Number of distinct cluster labels.
pub fn cluster_count(labels: &[usize]) -> usize {
    labels.iter().copied().max().map_or(0, |m| m + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::objectives::{QuadraticObjective, ZeroObjective};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn quad_graph(targets: &[Vec<f64>], edges: &[(usize, usize, f64)]) -> crate::ProblemGraph {
        let p = targets[0].len();
        let mut g = build_graph(targets.len(), p, edges).unwrap();
        for (i, t) in targets.iter().enumerate() {
            g.set_objective(i, Box::new(QuadraticObjective::new(t.clone())));
        }
        g
    }

    #[test]
    fn theta_clamps_and_flags_consensus() {
        // lambda = 0 -> theta = 1, copies keep their own side.
        let upd = theta_convex(2.0, 0.0, 1.0);
        assert_eq!(upd.theta, 1.0);
        assert!(!upd.consensus);

        // d = 0 -> consensus branch resolves the division by zero.
        let upd = theta_convex(0.0, 1.0, 1.0);
        assert_eq!(upd.theta, 0.5);
        assert!(upd.consensus);

        // Hand-evaluated boundary of the clamp: a=(2,0), b=0, c=1, rho=1.
        let upd = theta_convex(2.0, 1.0, 1.0);
        assert_eq!(upd.theta, 0.5);
        assert!(upd.consensus);
    }

    #[test]
    fn z_update_hand_worked_interior_case() {
        // a=(4,0), b=(0,0), penalty=1, rho=1 -> theta = 1 - 1/4 = 0.75.
        let a = [4.0, 0.0];
        let b = [0.0, 0.0];
        let mut zl = [0.0; 2];
        let mut zh = [0.0; 2];
        let upd = z_update(&a, &b, 1.0, 1.0, &mut zl, &mut zh);
        assert!((upd.theta - 0.75).abs() < 1e-15);
        assert_eq!(zl, [3.0, 0.0]);
        assert_eq!(zh, [1.0, 0.0]);
    }

    #[test]
    fn z_update_lambda_zero_keeps_sides() {
        let a = [1.0, -2.0];
        let b = [0.5, 3.0];
        let mut zl = [0.0; 2];
        let mut zh = [0.0; 2];
        let upd = z_update(&a, &b, 0.0, 2.0, &mut zl, &mut zh);
        assert_eq!(upd.theta, 1.0);
        assert_eq!(zl, a);
        assert_eq!(zh, b);
    }

    #[test]
    fn z_update_equal_inputs_consensus() {
        let a = [1.0, 1.0];
        let mut zl = [0.0; 2];
        let mut zh = [0.0; 2];
        let upd = z_update(&a, &a, 3.0, 1.0, &mut zl, &mut zh);
        assert_eq!(upd.theta, 0.5);
        assert!(upd.consensus);
        assert_eq!(zl, a);
        assert_eq!(zh, a);
    }

    #[test]
    fn u_update_accumulates_violation() {
        let mut u = vec![0.0];
        u_update(&[1.0], &[0.0], &mut u);
        assert_eq!(u, vec![1.0]);
        u_update(&[1.0], &[1.0], &mut u);
        assert_eq!(u, vec![1.0]);
    }

    #[test]
    fn solve_isolated_node_returns_minimizer() {
        let g = quad_graph(&[vec![2.0, -1.0]], &[]);
        let result = solve(&g, 0.0, &SolverConfig::default(), None).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 1);
        assert!(dist(result.x().row(0), &[2.0, -1.0]) < 1e-9);
        // Edgeless: both residual norms are exactly zero.
        assert_eq!(result.primal_residuals, vec![0.0]);
        assert_eq!(result.dual_residuals, vec![0.0]);
    }

    #[test]
    fn solve_two_nodes_large_lambda_reaches_consensus_mean() {
        let g = quad_graph(&[vec![1.0], vec![3.0]], &[(0, 1, 1.0)]);
        let cfg = SolverConfig {
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            max_iter: 5000,
            ..Default::default()
        };
        let result = solve(&g, 1e6, &cfg, None).unwrap();
        assert!(result.converged);
        assert!((result.x().row(0)[0] - 2.0).abs() < 1e-4);
        assert!((result.x().row(1)[0] - 2.0).abs() < 1e-4);
        assert!(result.consensus_edges.iter().all(|&f| f));
        assert_eq!(extract_clusters(&g, &result), vec![0, 0]);
    }

    #[test]
    fn solve_lambda_zero_decouples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let targets: Vec<Vec<f64>> = (0..6).map(|_| randn(&mut rng, 3)).collect();
        let edges = [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0), (3, 4, 1.0), (4, 5, 1.0)];
        let g = quad_graph(&targets, &edges);
        let cfg = SolverConfig {
            eps_abs: 1e-9,
            eps_rel: 1e-9,
            max_iter: 5000,
            ..Default::default()
        };
        let result = solve(&g, 0.0, &cfg, None).unwrap();
        assert!(result.converged);
        for (i, t) in targets.iter().enumerate() {
            assert!(dist(result.x().row(i), t) < 1e-5, "node {i}");
        }
        // Generic data: every node is its own cluster.
        let clusters = extract_clusters(&g, &result);
        assert_eq!(cluster_count(&clusters), 6);
    }

    #[test]
    fn x_update_single_neighbor_hand_solved() {
        // One node with one neighbor, f = ||x - a||^2, z - u = v, rho = 2:
        // x = (2a + 2v) / 4 = (a + v) / 2.
        let g = quad_graph(&[vec![4.0], vec![0.0]], &[(0, 1, 1.0)]);
        let mut state = SolverState::zeros(&g);
        state.z_lo.row_mut(0)[0] = 2.0; // v = z - u = 2
        let cfg = SolverConfig { rho: 2.0, ..Default::default() };
        x_update(&g, &mut state, &cfg).unwrap();
        assert!((state.x.row(0)[0] - 3.0).abs() < 1e-12); // (4 + 2) / 2
    }

    #[test]
    fn x_update_zero_objective_returns_anchor() {
        let mut g = quad_graph(&[vec![1.0], vec![2.0]], &[(0, 1, 1.0)]);
        g.set_objective(0, Box::new(ZeroObjective));
        let mut state = SolverState::zeros(&g);
        state.z_lo.row_mut(0)[0] = 0.7;
        state.u_lo.row_mut(0)[0] = 0.2;
        x_update(&g, &mut state, &SolverConfig::default()).unwrap();
        assert!((state.x.row(0)[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn warm_start_shape_mismatch_rejected() {
        let g1 = quad_graph(&[vec![0.0], vec![1.0]], &[(0, 1, 1.0)]);
        let g2 = quad_graph(&[vec![0.0], vec![1.0], vec![2.0]], &[(0, 1, 1.0)]);
        let state = SolverState::zeros(&g2);
        assert!(matches!(
            solve(&g1, 0.0, &SolverConfig::default(), Some(&state)),
            Err(SolverError::WarmStartMismatch)
        ));
    }

    #[test]
    fn worker_count_does_not_change_deterministic_result() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let targets: Vec<Vec<f64>> = (0..12).map(|_| randn(&mut rng, 3)).collect();
        let mut edges = Vec::new();
        for i in 0..12usize {
            for j in i + 1..12 {
                if rng.gen_bool(0.3) {
                    edges.push((i, j, rng.gen_range(0.1..2.0)));
                }
            }
        }
        let g = quad_graph(&targets, &edges);
        let base = SolverConfig { deterministic: true, max_iter: 200, ..Default::default() };
        let one = solve(&g, 0.7, &SolverConfig { workers: 1, ..base.clone() }, None).unwrap();
        let four = solve(&g, 0.7, &SolverConfig { workers: 4, ..base }, None).unwrap();
        assert_eq!(one.state, four.state);
        assert_eq!(one.objective.to_bits(), four.objective.to_bits());
    }

    #[test]
    fn residuals_zero_at_fixed_point() {
        // Construct the exact fixed point of the two-node problem at
        // lambda = 0: x at the targets, z = x, u = 0.
        let g = quad_graph(&[vec![1.0], vec![3.0]], &[(0, 1, 1.0)]);
        let mut state = SolverState::zeros(&g);
        state.x.row_mut(0)[0] = 1.0;
        state.x.row_mut(1)[0] = 3.0;
        state.z_lo.row_mut(0)[0] = 1.0;
        state.z_hi.row_mut(0)[0] = 3.0;
        let res = residuals(&g, &state, &state.z_lo.clone(), &state.z_hi.clone(), &SolverConfig::default());
        assert_eq!(res.r_norm, 0.0);
        assert_eq!(res.s_norm, 0.0);
        assert!(res.converged());
    }

    #[test]
    fn residuals_trend_below_tolerance_on_small_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let targets: Vec<Vec<f64>> = (0..10).map(|_| randn(&mut rng, 2)).collect();
        let mut edges = Vec::new();
        for i in 0..10usize {
            edges.push((i, (i + 1) % 10, 1.0));
        }
        let g = quad_graph(&targets, &edges);
        let result = solve(&g, 0.5, &SolverConfig::default(), None).unwrap();
        assert!(result.converged);
        let last_r = *result.primal_residuals.last().unwrap();
        let first_r = result.primal_residuals[0];
        assert!(last_r <= first_r);
        assert_eq!(result.primal_residuals.len(), result.iterations);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(256))]

            /// theta stays in [0.5, 1] and the copy sum is conserved:
            /// z_lo + z_hi = a + b exactly.
            #[test]
            fn theta_bounds_and_copy_sum(
                seed in 0u64..10_000,
                penalty in 0.0f64..5.0,
                rho in 0.1f64..10.0,
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = randn(&mut rng, 3);
                let b = randn(&mut rng, 3);
                let mut zl = vec![0.0; 3];
                let mut zh = vec![0.0; 3];
                let upd = z_update(&a, &b, penalty, rho, &mut zl, &mut zh);
                prop_assert!((0.5..=1.0).contains(&upd.theta));
                for t in 0..3 {
                    let sum = zl[t] + zh[t];
                    let target = a[t] + b[t];
                    prop_assert!((sum - target).abs() <= 1e-12 * target.abs().max(1.0));
                }
            }
        }
    }
}

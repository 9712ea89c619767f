//! Concave edge-penalty extension: the group-lasso norm on each edge
//! difference is replaced by `phi(||x_j - x_k||)` for a monotone concave
//! `phi` with `phi(0) = 0`, which tracks the l0 count of broken edges more
//! closely than the proportional lasso penalty.
//!
//! Only the log family `phi(u) = log(1 + u/eps)` ships; its stationarity
//! condition on the edge subproblem is a quadratic in the interpolation
//! coefficient, so the modified z-update stays closed-form. The problem is
//! no longer convex: the solver runs a fixed number of sweeps and returns
//! the best iterate seen instead of trusting the residuals.

use crate::graph::ProblemGraph;
use crate::solver::{
    edge_penalty_sum, edge_sweep, init_state, install_pool, node_objective_sum, residuals,
    x_update, SolverConfig, SolverError, SolverResult, SolverState,
};

/// The log penalty `phi(u) = log(1 + u/eps_log)` on `u >= 0`.
#[derive(Debug, Clone, Copy)]
pub struct PhiLog {
    pub eps_log: f64,
}

impl PhiLog {
    pub fn new(eps_log: f64) -> Self {
        assert!(eps_log > 0.0, "log penalty scale must be positive");
        PhiLog { eps_log }
    }

    pub fn value(&self, u: f64) -> f64 {
        (u / self.eps_log).ln_1p()
    }
}

#[derive(Debug, Clone)]
pub struct NonconvexConfig {
    pub base: SolverConfig,
    /// Sweeps per solve; residual-based stopping does not apply here.
    pub fixed_iters: usize,
    pub phi: PhiLog,
}

impl Default for NonconvexConfig {
    fn default() -> Self {
        NonconvexConfig {
            base: SolverConfig::default(),
            fixed_iters: 500,
            phi: PhiLog::new(1.0),
        }
    }
}

/// Solves the one-dimensional edge subproblem of the log penalty:
/// minimize `g(theta) = c * log(1 + d(1 - 2 theta)/eps) + rho d^2 theta^2`
/// over `theta` in `[0, 1/2]`. Candidates are the consensus point
/// `theta = 1/2` plus the real roots of
/// `2 rho d^2 theta^2 - rho d (d + eps) theta + c = 0` inside `[0, 1/2)`.
pub fn theta_log(d: f64, c: f64, rho: f64, eps_log: f64) -> f64 {
    assert!(rho > 0.0 && eps_log > 0.0);
    if d <= 0.0 {
        return 0.5;
    }
    let g = |theta: f64| c * (1.0 + d * (1.0 - 2.0 * theta) / eps_log).ln() + rho * d * d * theta * theta;
    let mut best = (0.5, rho * d * d * 0.25);
    let disc = rho * rho * (d + eps_log) * (d + eps_log) - 8.0 * rho * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        for root in [
            (rho * (d + eps_log) - sq) / (4.0 * rho * d),
            (rho * (d + eps_log) + sq) / (4.0 * rho * d),
        ] {
            if (0.0..0.5).contains(&root) {
                let value = g(root);
                if value < best.1 {
                    best = (root, value);
                }
            }
        }
    }
    best.0
}

/// Modified z-update for the log penalty. With `a = x_j + u_jk`,
/// `b = x_k + u_kj` and `c = lambda * w`, emits
/// `z_lo = (1 - theta) a + theta b`, `z_hi = theta a + (1 - theta) b`
/// for the minimizing `theta` in `[0, 1/2]`; `theta = 1/2` is consensus.
pub fn z_update_log(
    a: &[f64],
    b: &[f64],
    c: f64,
    rho: f64,
    eps_log: f64,
    z_lo: &mut [f64],
    z_hi: &mut [f64],
) -> f64 {
    let d = crate::vecmath::dist(a, b);
    let theta = theta_log(d, c, rho, eps_log);
    let own = 1.0 - theta;
    for i in 0..a.len() {
        z_lo[i] = own * a[i] + theta * b[i];
        z_hi[i] = theta * a[i] + own * b[i];
    }
    theta
}

/// Runs exactly `cfg.fixed_iters` x/z/u sweeps with the log-penalty
/// z-update, evaluating the true concave-penalty objective after each sweep
/// and returning the best iterate seen. `converged` is always false; the
/// reported solution's sweep index is in `best_iter`.
pub fn solve_nonconvex(
    g: &ProblemGraph,
    lambda: f64,
    cfg: &NonconvexConfig,
    warm: Option<&SolverState>,
) -> Result<SolverResult, SolverError> {
    if cfg.fixed_iters == 0 {
        return Err(SolverError::BadConfig("fixed_iters must be >= 1".to_string()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(SolverError::BadLambda(lambda));
    }
    let mut state = init_state(g, warm)?;
    let base = cfg.base.clone();
    let phi = cfg.phi;
    let fixed_iters = cfg.fixed_iters;
    install_pool(base.workers, move || {
        let n = g.edge_count();
        let mut z_prev_lo = state.z_lo.clone();
        let mut z_prev_hi = state.z_hi.clone();
        let mut consensus = vec![false; n];
        let mut primal = Vec::with_capacity(fixed_iters);
        let mut dual = Vec::with_capacity(fixed_iters);
        let mut trace = Vec::with_capacity(fixed_iters);
        let mut best: Option<(f64, usize, SolverState, Vec<bool>)> = None;
        for iter in 1..=fixed_iters {
            x_update(g, &mut state, &base)?;
            z_prev_lo.copy_from(&state.z_lo);
            z_prev_hi.copy_from(&state.z_hi);
            edge_sweep(g, &mut state, lambda, &mut consensus, |d, pen| {
                let theta = theta_log(d, pen, base.rho, phi.eps_log);
                (1.0 - theta, theta == 0.5)
            });
            let res = residuals(g, &state, &z_prev_lo, &z_prev_hi, &base);
            let objective = node_objective_sum(g, &state.x, base.deterministic)
                + edge_penalty_sum(g, &state.x, lambda, base.deterministic, |d| phi.value(d));
            primal.push(res.r_norm);
            dual.push(res.s_norm);
            trace.push(objective);
            if best.as_ref().map_or(true, |(b, ..)| objective < *b) {
                best = Some((objective, iter, state.clone(), consensus.clone()));
            }
        }
        let (objective, best_iter, best_state, best_flags) = best.expect("fixed_iters >= 1");
        if !objective.is_finite() {
            return Err(SolverError::Infeasible { objective });
        }
        Ok(SolverResult {
            iterations: fixed_iters,
            converged: false,
            objective,
            primal_residuals: primal,
            dual_residuals: dual,
            objective_trace: trace,
            consensus_edges: best_flags,
            best_iter: Some(best_iter),
            state: best_state,
        })
    })
}

/// The concave-penalty objective at `x`.
pub fn nonconvex_objective(
    g: &ProblemGraph,
    x: &crate::graph::VectorList,
    lambda: f64,
    phi: PhiLog,
    deterministic: bool,
) -> f64 {
    node_objective_sum(g, x, deterministic)
        + edge_penalty_sum(g, x, lambda, deterministic, |d| phi.value(d))
}

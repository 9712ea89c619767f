//! Event-detection experiment: sweep the node-lasso weight `mu` at a fixed
//! edge parameter for the network methods, sweep the pmf threshold for the
//! Poisson baseline, and tabulate predictions needed per recall level.

use serde::Serialize;

use crate::error::CliError;
use netlasso::datasets::events::WEEK_SLOTS;
use netlasso::datasets::{
    chain_event_graph, detect_events, detrend_series, match_events, poisson_baseline,
};
use netlasso::nonconvex::{solve_nonconvex, NonconvexConfig, PhiLog};
use netlasso::solver::{solve, SolverConfig, SolverState};

#[derive(Debug, Clone)]
pub struct EventsConfig {
    /// `(in, out)` counts per 30-minute slot.
    pub counts: Vec<[f64; 2]>,
    /// Ground-truth events as half-open slot intervals.
    pub truth: Vec<(usize, usize)>,
    pub period: usize,
    /// Fixed edge parameter while `mu` is swept.
    pub lambda: f64,
    pub mu_grid: Vec<f64>,
    pub epsilon_grid: Vec<f64>,
    pub k_min: usize,
    pub solver: SolverConfig,
    pub nonconvex_fixed_iters: usize,
    pub nonconvex_eps_log: f64,
    pub run_nonconvex: bool,
}

impl EventsConfig {
    pub fn geometric_grid(start: f64, factor: f64, count: usize) -> Vec<f64> {
        let mut grid = Vec::with_capacity(count);
        let mut v = start;
        for _ in 0..count {
            grid.push(v);
            v *= factor;
        }
        grid
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    /// `mu` for the network methods, `epsilon` for the Poisson baseline.
    pub parameter: f64,
    pub predictions: usize,
    pub correct: usize,
}

#[derive(Debug, Serialize)]
pub struct RecallRow {
    pub recall: usize,
    pub convex: Option<usize>,
    pub nonconvex: Option<usize>,
    pub poisson: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct EventsOutcome {
    pub slots: usize,
    pub weeks: f64,
    pub truth_events: usize,
    pub lambda: f64,
    pub k_min: usize,
    pub convex: Vec<SweepPoint>,
    pub nonconvex: Vec<SweepPoint>,
    pub poisson: Vec<SweepPoint>,
    /// Fewest predictions reaching each recall level, per method.
    pub required_at_recall: Vec<RecallRow>,
}

/// Fewest predictions among sweep points reaching at least `recall` hits.
fn required_predictions(curve: &[SweepPoint], recall: usize) -> Option<usize> {
    curve
        .iter()
        .filter(|p| p.correct >= recall)
        .map(|p| p.predictions)
        .min()
}

pub fn run_events_experiment(cfg: &EventsConfig) -> Result<EventsOutcome, CliError> {
    if cfg.counts.len() < cfg.period {
        return Err(CliError::Usage(format!(
            "series of {} slots is shorter than one period ({})",
            cfg.counts.len(),
            cfg.period
        )));
    }
    let detrended = detrend_series(&cfg.counts, cfg.period);

    let mut convex = Vec::with_capacity(cfg.mu_grid.len());
    let mut nonconvex = Vec::with_capacity(cfg.mu_grid.len());
    let mut warm: Option<SolverState> = None;
    let mut warm_ncvx: Option<SolverState> = None;
    for &mu in &cfg.mu_grid {
        let graph = chain_event_graph(&detrended.xbar, mu)?;
        let result = solve(&graph, cfg.lambda, &cfg.solver, warm.as_ref())?;
        let predicted = detect_events(result.x(), cfg.k_min);
        convex.push(SweepPoint {
            parameter: mu,
            predictions: predicted.len(),
            correct: match_events(&predicted, &cfg.truth),
        });
        warm = Some(result.state);

        if cfg.run_nonconvex {
            let ncfg = NonconvexConfig {
                base: cfg.solver.clone(),
                fixed_iters: cfg.nonconvex_fixed_iters,
                phi: PhiLog::new(cfg.nonconvex_eps_log),
            };
            let result = solve_nonconvex(&graph, cfg.lambda, &ncfg, warm_ncvx.as_ref())?;
            let predicted = detect_events(result.x(), cfg.k_min);
            nonconvex.push(SweepPoint {
                parameter: mu,
                predictions: predicted.len(),
                correct: match_events(&predicted, &cfg.truth),
            });
            warm_ncvx = Some(result.state);
        }
    }

    let poisson: Vec<SweepPoint> = cfg
        .epsilon_grid
        .iter()
        .map(|&eps| {
            let predicted = poisson_baseline(&cfg.counts, cfg.period, eps, cfg.k_min);
            SweepPoint {
                parameter: eps,
                predictions: predicted.len(),
                correct: match_events(&predicted, &cfg.truth),
            }
        })
        .collect();

    let n_truth = cfg.truth.len();
    let mut levels: Vec<usize> = [18, 24, 26, 27, 28, 29, 30]
        .into_iter()
        .filter(|&r| r <= n_truth)
        .chain(std::iter::once(n_truth))
        .collect();
    levels.sort_unstable();
    levels.dedup();
    let required_at_recall = levels
        .into_iter()
        .map(|recall| RecallRow {
            recall,
            convex: required_predictions(&convex, recall),
            nonconvex: required_predictions(&nonconvex, recall),
            poisson: required_predictions(&poisson, recall),
        })
        .collect();

    Ok(EventsOutcome {
        slots: cfg.counts.len(),
        weeks: cfg.counts.len() as f64 / WEEK_SLOTS as f64,
        truth_events: n_truth,
        lambda: cfg.lambda,
        k_min: cfg.k_min,
        convex,
        nonconvex,
        poisson,
        required_at_recall,
    })
}

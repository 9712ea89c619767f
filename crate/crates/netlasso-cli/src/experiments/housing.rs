//! Housing-price experiment: per-house regression models on a geographic
//! kNN graph, held-out houses predicted by solving the Weber problem over
//! their nearest training neighbors' models. MSE is reported in
//! standardized price units, so the naive global-mean guess scores near the
//! test price variance.

use std::path::PathBuf;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::CliError;
use netlasso::datasets::housing::{housing_graph, predict_price};
use netlasso::datasets::{load_housing, nearest_training, standardize_records, StandardizedHousing};
use netlasso::inference::{predict_node, WEBER_DEFAULT_MAX_ITER, WEBER_DEFAULT_TOL};
use netlasso::nonconvex::PhiLog;
use netlasso::path::{solve_path, PathConfig, PathMode, PathResult};
use netlasso::solver::SolverConfig;

#[derive(Debug, Clone)]
pub struct HousingConfig {
    pub csv: PathBuf,
    pub test_count: usize,
    pub k: usize,
    pub mu: f64,
    pub seed: u64,
    pub solver: SolverConfig,
    pub path: PathConfig,
    pub nonconvex_fixed_iters: usize,
    pub nonconvex_eps_log: f64,
    pub run_nonconvex: bool,
}

#[derive(Debug, Serialize)]
pub struct MsePoint {
    pub lambda: f64,
    pub mse: f64,
    pub n_clusters: usize,
}

#[derive(Debug, Serialize)]
pub struct HousingOutcome {
    pub records: usize,
    pub skipped_rows: usize,
    pub train_nodes: usize,
    pub edges: usize,
    pub missing_feature_fraction: f64,
    pub k: usize,
    pub mu: f64,
    pub seed: u64,
    /// lambda = 0: spatial-only prediction (weighted median of neighbors).
    pub geographic_mse: f64,
    /// Consensus endpoint: one regularized regression for all houses.
    pub consensus_mse: f64,
    /// Predicting the (standardized) global mean price everywhere.
    pub naive_mse: f64,
    pub reached_consensus: bool,
    pub convex: Vec<MsePoint>,
    pub convex_min_lambda: f64,
    pub convex_min_mse: f64,
    pub nonconvex: Vec<MsePoint>,
    pub nonconvex_min_lambda: f64,
    pub nonconvex_min_mse: f64,
}

struct TestHouse {
    neighbors: Vec<(usize, f64)>,
    features: [f64; 3],
    price: f64,
}

fn path_mses(path: &PathResult, tests: &[TestHouse]) -> Result<Vec<MsePoint>, CliError> {
    let mut points = Vec::with_capacity(path.points.len());
    for p in &path.points {
        let mut sum = 0.0;
        for t in tests {
            let estimate = predict_node(
                p.result.x(),
                &t.neighbors,
                |x| predict_price(x, &t.features),
                WEBER_DEFAULT_TOL,
                WEBER_DEFAULT_MAX_ITER,
            )?;
            sum += (estimate - t.price) * (estimate - t.price);
        }
        points.push(MsePoint {
            lambda: p.lambda,
            mse: sum / tests.len() as f64,
            n_clusters: p.n_clusters,
        });
    }
    Ok(points)
}

fn min_point(points: &[MsePoint]) -> (f64, f64) {
    points
        .iter()
        .map(|p| (p.lambda, p.mse))
        .fold((0.0, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best })
}

pub fn run_housing_experiment(cfg: &HousingConfig) -> Result<HousingOutcome, CliError> {
    let (records, skipped_rows) = load_housing(&cfg.csv)?;
    if records.len() < cfg.test_count + cfg.k + 1 {
        return Err(CliError::Usage(format!(
            "{} records cannot support a {}-house test split",
            records.len(),
            cfg.test_count
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut test_idx: Vec<usize> =
        sample(&mut rng, records.len(), cfg.test_count).into_iter().collect();
    test_idx.sort_unstable();
    let is_test: Vec<bool> = {
        let mut mask = vec![false; records.len()];
        for &i in &test_idx {
            mask[i] = true;
        }
        mask
    };
    let train_idx: Vec<usize> = (0..records.len()).filter(|&i| !is_test[i]).collect();

    let (standardized, stats) = standardize_records(&records, &train_idx)?;
    let train: Vec<StandardizedHousing> =
        train_idx.iter().map(|&i| standardized[i].clone()).collect();
    let train_points: Vec<(f64, f64)> =
        train.iter().map(|r| (r.latitude, r.longitude)).collect();

    let graph = housing_graph(&train, cfg.k, cfg.mu)?;

    let tests: Vec<TestHouse> = test_idx
        .iter()
        .map(|&i| {
            let r = &standardized[i];
            TestHouse {
                neighbors: nearest_training(&train_points, (r.latitude, r.longitude), cfg.k),
                features: r.features,
                price: r.price,
            }
        })
        .collect();
    let naive_mse = tests.iter().map(|t| t.price * t.price).sum::<f64>() / tests.len() as f64;

    let convex_path = solve_path(&graph, &cfg.solver, &cfg.path, &PathMode::Convex)?;
    let convex = path_mses(&convex_path, &tests)?;
    let nonconvex = if cfg.run_nonconvex {
        let mode = PathMode::Nonconvex {
            fixed_iters: cfg.nonconvex_fixed_iters,
            phi: PhiLog::new(cfg.nonconvex_eps_log),
        };
        path_mses(&solve_path(&graph, &cfg.solver, &cfg.path, &mode)?, &tests)?
    } else {
        Vec::new()
    };

    let (convex_min_lambda, convex_min_mse) = min_point(&convex);
    let (nonconvex_min_lambda, nonconvex_min_mse) = min_point(&nonconvex);
    Ok(HousingOutcome {
        records: records.len(),
        skipped_rows,
        train_nodes: train.len(),
        edges: graph.edge_count(),
        missing_feature_fraction: stats.missing_fraction,
        k: cfg.k,
        mu: cfg.mu,
        seed: cfg.seed,
        geographic_mse: convex[0].mse,
        consensus_mse: convex.last().expect("path nonempty").mse,
        naive_mse,
        reached_consensus: convex_path.lambda_critical_est.is_some(),
        convex_min_lambda,
        convex_min_mse,
        convex,
        nonconvex_min_lambda,
        nonconvex_min_mse,
        nonconvex,
    })
}

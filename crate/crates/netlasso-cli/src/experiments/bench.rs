//! Scaling benchmark: random regular graphs with per-node quadratic costs
//! solved once at a mid-path lambda, timing only the solve. The per-node
//! dimension scales the unknown count without changing the topology.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::CliError;
use netlasso::datasets::gen_regular_graph;
use netlasso::graph::{build_graph, VectorList};
use netlasso::objectives::QuadraticObjective;
use netlasso::path::lambda_initial_heuristic;
use netlasso::solver::{solve, SolverConfig};

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub nodes: usize,
    pub degree: usize,
    pub dim: usize,
    pub unknowns: usize,
    pub lambda: f64,
    pub solve_seconds: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn run_bench(
    nodes: usize,
    degree: usize,
    dims: &[usize],
    lambda_doublings: u32,
    solver: &SolverConfig,
    seed: u64,
) -> Result<Vec<BenchRow>, CliError> {
    if nodes == 0 {
        return Err(CliError::Usage("--nodes must be positive".to_string()));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(CliError::Usage("--dims must list positive dimensions".to_string()));
    }
    let edges = gen_regular_graph(nodes, degree, seed)?;
    let mut rows = Vec::with_capacity(dims.len());
    for (which, &dim) in dims.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (which as u64 + 1) << 32);
        let mut g = build_graph(nodes, dim, &edges)?;
        let mut targets = VectorList::zeros(nodes, dim);
        for i in 0..nodes {
            let t: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            targets.row_mut(i).copy_from_slice(&t);
            g.set_objective(i, Box::new(QuadraticObjective::new(t)));
        }
        // The exact lambda = 0 solution is the targets themselves; scale the
        // heuristic up to land mid-path.
        let est = lambda_initial_heuristic(&g, &targets, 5, seed);
        let lambda = est.value * f64::powi(2.0, lambda_doublings as i32);
        let started = Instant::now();
        let result = solve(&g, lambda, solver, None)?;
        let solve_seconds = started.elapsed().as_secs_f64();
        rows.push(BenchRow {
            nodes,
            degree,
            dim,
            unknowns: nodes * dim,
            lambda,
            solve_seconds,
            iterations: result.iterations,
            converged: result.converged,
        });
    }
    Ok(rows)
}

pub fn write_bench_csv(path: &std::path::Path, rows: &[BenchRow]) -> Result<(), CliError> {
    use std::fmt::Write as _;
    let mut out = String::from("nodes,degree,dim,unknowns,lambda,solve_seconds,iterations,converged\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.nodes, r.degree, r.dim, r.unknowns, r.lambda, r.solve_seconds, r.iterations, r.converged
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

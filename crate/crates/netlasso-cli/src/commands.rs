//! Command implementations behind the CLI surface.

use std::path::Path;

use crate::cli::{
    BenchArgs, EventsExperimentArgs, HousingExperimentArgs, InferArgs, PathArgs, SolveArgs,
    SvmExperimentArgs,
};
use crate::error::CliError;
use crate::experiments::{
    bench::write_bench_csv, run_bench, run_events_experiment, run_housing_experiment,
    run_svm_experiment, EventsConfig, HousingConfig, SvmConfig,
};
use crate::objfile::load_objectives;
use crate::output::{
    ensure_out_dir, read_x_csv, write_json, write_path_outputs, write_plot_csv, write_trace_csv,
    write_x_csv, ConfigRecord, ManifestBuilder, SolveRecord,
};
use netlasso::datasets::{load_calit2_counts, load_event_list, synthetic_event_series, SyntheticEventSpec};
use netlasso::graph::read_edge_list;
use netlasso::inference::{weber_instance_from_neighbors, weber_solve};
use netlasso::path::solve_path;
use netlasso::solver::{cluster_count, extract_clusters, solve};

pub fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let out_dir = ensure_out_dir(&args.out_dir)?;
    let mut manifest = ManifestBuilder::new("solve", args.solver.seed, args.solver.deterministic);
    manifest.fingerprint_input(&args.graph)?;
    manifest.fingerprint_input(&args.objectives)?;

    manifest.begin_phase("load");
    let mut graph = read_edge_list(&args.graph)?;
    load_objectives(&args.objectives, &mut graph)?;

    manifest.begin_phase("solve");
    let cfg = args.solver.solver_config();
    let result = solve(&graph, args.lambda, &cfg, None)?;

    manifest.begin_phase("write");
    let clusters = extract_clusters(&graph, &result);
    let record = SolveRecord {
        lambda: args.lambda,
        iterations: result.iterations,
        converged: result.converged,
        objective: result.objective,
        n_clusters: cluster_count(&clusters),
        clusters,
        consensus_edges: result.consensus_edges.clone(),
        primal_residuals: result.primal_residuals.clone(),
        dual_residuals: result.dual_residuals.clone(),
        best_iter: None,
        config: ConfigRecord::from(&cfg),
    };
    let result_path = out_dir.join("result.json");
    write_json(&result_path, &record)?;
    manifest.record_output(&result_path);
    let x_path = out_dir.join("x.csv");
    write_x_csv(&x_path, result.x())?;
    manifest.record_output(&x_path);
    if args.trace {
        let trace_path = out_dir.join("trace.csv");
        write_trace_csv(&trace_path, &result)?;
        manifest.record_output(&trace_path);
    }
    manifest.write(&out_dir)?;

    if result.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence)
    }
}

pub fn cmd_path(args: &PathArgs) -> Result<(), CliError> {
    let out_dir = ensure_out_dir(&args.out_dir)?;
    let mut manifest = ManifestBuilder::new("path", args.solver.seed, args.solver.deterministic);
    manifest.fingerprint_input(&args.graph)?;
    manifest.fingerprint_input(&args.objectives)?;

    manifest.begin_phase("load");
    let mut graph = read_edge_list(&args.graph)?;
    load_objectives(&args.objectives, &mut graph)?;

    manifest.begin_phase("solve");
    let cfg = args.solver.solver_config();
    let pcfg = args.path.path_config(args.solver.seed);
    let mode = args.path.path_mode();
    let path_result = solve_path(&graph, &cfg, &pcfg, &mode)?;

    manifest.begin_phase("write");
    let record = write_path_outputs(&out_dir, &path_result, &mode, &cfg, None)?;
    manifest.record_output(&out_dir.join("path.json"));
    for point in &record.points {
        manifest.record_output(&out_dir.join(&point.x_csv));
    }
    if args.plot_data {
        let rows: Vec<(f64, f64)> = record
            .points
            .iter()
            .map(|p| (p.lambda, p.objective))
            .collect();
        let plot_path = out_dir.join("plot.csv");
        write_plot_csv(&plot_path, &rows, "objective")?;
        manifest.record_output(&plot_path);
    }
    manifest.write(&out_dir)?;
    Ok(())
}

pub fn cmd_infer(args: &InferArgs) -> Result<(), CliError> {
    let out_dir = ensure_out_dir(&args.out_dir)?;
    let mut manifest = ManifestBuilder::new("infer", 0, args.deterministic);
    manifest.fingerprint_input(&args.x)?;
    manifest.fingerprint_input(&args.neighbors)?;

    let x = read_x_csv(&args.x)?;
    let neighbors = read_neighbor_list(&args.neighbors, x.count())?;
    let inst = weber_instance_from_neighbors(&x, &neighbors)?;
    let solution = weber_solve(&inst, args.tol, args.max_iter);

    #[derive(serde::Serialize)]
    struct InferRecord {
        x: Vec<f64>,
        iterations: usize,
        converged: bool,
        objective: f64,
    }
    let record = InferRecord {
        objective: inst.objective(&solution.x),
        x: solution.x,
        iterations: solution.iterations,
        converged: solution.converged,
    };
    let path = out_dir.join("inferred.json");
    write_json(&path, &record)?;
    manifest.record_output(&path);
    manifest.write(&out_dir)?;
    Ok(())
}

fn read_neighbor_list(path: &Path, node_count: usize) -> Result<Vec<(usize, f64)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let mut neighbors = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| CliError::Parse(format!("{}:{}: {msg}", path.display(), idx + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(format!("expected `node_id weight`, got `{line}`")));
        }
        let id: usize = fields[0].parse().map_err(|e| err(format!("bad node id: {e}")))?;
        let w: f64 = fields[1].parse().map_err(|e| err(format!("bad weight: {e}")))?;
        if id >= node_count {
            return Err(err(format!("node id {id} out of range ({node_count} nodes)")));
        }
        neighbors.push((id, w));
    }
    Ok(neighbors)
}

pub fn cmd_experiment_svm(args: &SvmExperimentArgs) -> Result<(), CliError> {
    let out_dir = ensure_out_dir(&args.out_dir)?;
    let mut manifest =
        ManifestBuilder::new("experiment-svm", args.solver.seed, args.solver.deterministic);
    let cfg = SvmConfig {
        spec: netlasso::datasets::SvmBenchmarkSpec {
            n_nodes: args.nodes,
            n_groups: args.groups,
            dim: args.dim,
            train_per_node: args.train_per_node,
            test_per_node: args.test_per_node,
            p_intra: args.p_intra,
            p_inter: args.p_inter,
            noise_sd: args.noise_sd,
            slack_penalty: args.svm_c,
            seed: args.solver.seed,
        },
        solver: args.solver.solver_config(),
        path: args.path.path_config(args.solver.seed),
        nonconvex_fixed_iters: args.path.fixed_iters,
        nonconvex_eps_log: args.path.eps_log,
        run_nonconvex: true,
    };
    manifest.begin_phase("run");
    let outcome = run_svm_experiment(&cfg)?;
    manifest.begin_phase("write");
    let path = out_dir.join("svm_results.json");
    write_json(&path, &outcome)?;
    manifest.record_output(&path);
    let rows: Vec<(f64, f64)> = outcome.convex.iter().map(|p| (p.lambda, p.accuracy)).collect();
    let plot = out_dir.join("svm_accuracy.csv");
    write_plot_csv(&plot, &rows, "accuracy")?;
    manifest.record_output(&plot);
    manifest.write(&out_dir)?;
    Ok(())
}

pub fn cmd_experiment_housing(args: &HousingExperimentArgs) -> Result<(), CliError> {
    let out_dir = ensure_out_dir(&args.out_dir)?;
    let mut manifest =
        ManifestBuilder::new("experiment-housing", args.solver.seed, args.solver.deterministic);
    manifest.fingerprint_input(&args.csv)?;
    let cfg = HousingConfig {
        csv: args.csv.clone(),
        test_count: args.test_count,
        k: args.k,
        mu: args.mu,
        seed: args.solver.seed,
        solver: args.solver.solver_config(),
        path: args.path.path_config(args.solver.seed),
        nonconvex_fixed_iters: args.path.fixed_iters,
        nonconvex_eps_log: args.path.eps_log,
        run_nonconvex: true,
    };
    manifest.begin_phase("run");
    let outcome = run_housing_experiment(&cfg)?;
    manifest.begin_phase("write");
    let path = out_dir.join("housing_results.json");
    write_json(&path, &outcome)?;
    manifest.record_output(&path);
    let rows: Vec<(f64, f64)> = outcome.convex.iter().map(|p| (p.lambda, p.mse)).collect();
    let plot = out_dir.join("housing_mse.csv");
    write_plot_csv(&plot, &rows, "mse")?;
    manifest.record_output(&plot);
    manifest.write(&out_dir)?;
    Ok(())
}

pub fn cmd_experiment_events(args: &EventsExperimentArgs) -> Result<(), CliError> {
    let out_dir = ensure_out_dir(&args.out_dir)?;
    let mut manifest =
        ManifestBuilder::new("experiment-events", args.solver.seed, args.solver.deterministic);
    let (counts, truth) = if args.synthetic {
        let spec = SyntheticEventSpec {
            weeks: args.weeks,
            n_events: args.n_events,
            seed: args.solver.seed,
            ..Default::default()
        };
        synthetic_event_series(&spec)
    } else {
        let counts_path = args.counts.as_ref().ok_or_else(|| {
            CliError::Usage("--counts and --events are required without --synthetic".to_string())
        })?;
        let events_path = args.events.as_ref().ok_or_else(|| {
            CliError::Usage("--counts and --events are required without --synthetic".to_string())
        })?;
        manifest.fingerprint_input(counts_path)?;
        manifest.fingerprint_input(events_path)?;
        let (counts, start) = load_calit2_counts(counts_path)?;
        let truth = load_event_list(events_path, start, counts.len())?;
        (counts, truth)
    };
    let cfg = EventsConfig {
        counts,
        truth,
        period: netlasso::datasets::events::WEEK_SLOTS,
        lambda: args.lambda,
        mu_grid: EventsConfig::geometric_grid(args.mu_start, args.mu_factor, args.mu_count),
        epsilon_grid: EventsConfig::geometric_grid(args.eps_start, args.eps_factor, args.eps_count),
        k_min: args.k_min,
        solver: args.solver.solver_config(),
        nonconvex_fixed_iters: args.fixed_iters,
        nonconvex_eps_log: args.eps_log,
        run_nonconvex: true,
    };
    manifest.begin_phase("run");
    let outcome = run_events_experiment(&cfg)?;
    manifest.begin_phase("write");
    let path = out_dir.join("events_results.json");
    write_json(&path, &outcome)?;
    manifest.record_output(&path);
    manifest.write(&out_dir)?;
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let out_dir = ensure_out_dir(&args.out_dir)?;
    let mut manifest = ManifestBuilder::new("bench", args.solver.seed, args.solver.deterministic);
    manifest.begin_phase("run");
    let mut rows = run_bench(
        args.nodes,
        args.degree,
        &args.dims,
        args.lambda_doublings,
        &args.solver.solver_config(),
        args.solver.seed,
    )?;
    if args.solver.deterministic {
        // Wall times are inherently non-reproducible; deterministic runs
        // zero them so reruns stay bit-identical.
        for row in &mut rows {
            row.solve_seconds = 0.0;
        }
    }
    manifest.begin_phase("write");
    let path = out_dir.join("bench.csv");
    write_bench_csv(&path, &rows)?;
    manifest.record_output(&path);
    manifest.write(&out_dir)?;
    Ok(())
}

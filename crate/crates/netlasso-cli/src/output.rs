//! Result serialization and the append-only run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use netlasso::graph::VectorList;
use netlasso::path::{PathMode, PathResult};
use netlasso::solver::{SolverConfig, SolverResult};

#[derive(Debug, Serialize)]
pub struct ConfigRecord {
    pub rho: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub tol_prox: f64,
    pub workers: usize,
    pub deterministic: bool,
}

impl From<&SolverConfig> for ConfigRecord {
    fn from(cfg: &SolverConfig) -> Self {
        ConfigRecord {
            rho: cfg.rho,
            eps_abs: cfg.eps_abs,
            eps_rel: cfg.eps_rel,
            max_iter: cfg.max_iter,
            tol_prox: cfg.tol_prox,
            workers: cfg.workers,
            deterministic: cfg.deterministic,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SolveRecord {
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub n_clusters: usize,
    pub clusters: Vec<usize>,
    pub consensus_edges: Vec<bool>,
    pub primal_residuals: Vec<f64>,
    pub dual_residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_iter: Option<usize>,
    pub config: ConfigRecord,
}

#[derive(Debug, Serialize)]
pub struct PathPointRecord {
    pub lambda: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n_clusters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_iter: Option<usize>,
    /// File with this point's node solutions, relative to the output dir.
    pub x_csv: String,
}

#[derive(Debug, Serialize)]
pub struct PathRecord {
    pub mode: String,
    pub lambda_critical_est: Option<f64>,
    pub consensus_x: Option<Vec<f64>>,
    pub diagnostics: Vec<String>,
    pub points: Vec<PathPointRecord>,
    pub config: ConfigRecord,
}

pub fn mode_name(mode: &PathMode) -> &'static str {
    match mode {
        PathMode::Convex => "convex",
        PathMode::Nonconvex { .. } => "nonconvex",
    }
}

/// One row per node, comma-separated, shortest round-trip float formatting.
pub fn write_x_csv(path: &Path, x: &VectorList) -> Result<(), CliError> {
    let mut out = String::new();
    for row in x.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_x_csv(path: &Path) -> Result<VectorList, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| {
            CliError::Parse(format!("{}:{}: {e}", path.display(), idx + 1))
        })?);
    }
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(CliError::Parse(format!(
            "{}: empty or ragged matrix",
            path.display()
        )));
    }
    Ok(VectorList::from_rows(&rows))
}

/// Per-iteration trace: `iter,r_norm,s_norm,objective[,best_iter]`.
pub fn write_trace_csv(path: &Path, result: &SolverResult) -> Result<(), CliError> {
    let mut out = String::new();
    let nonconvex = result.best_iter.is_some();
    out.push_str(if nonconvex {
        "iter,r_norm,s_norm,objective,best_iter\n"
    } else {
        "iter,r_norm,s_norm,objective\n"
    });
    let mut best = f64::INFINITY;
    let mut best_iter = 0usize;
    for i in 0..result.iterations {
        let obj = result.objective_trace[i];
        if nonconvex && obj < best {
            best = obj;
            best_iter = i + 1;
        }
        let _ = write!(
            out,
            "{},{},{},{}",
            i + 1,
            result.primal_residuals[i],
            result.dual_residuals[i],
            obj
        );
        if nonconvex {
            let _ = write!(out, ",{best_iter}");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Tidy `lambda,metric` CSV for plotting.
pub fn write_plot_csv(
    path: &Path,
    rows: &[(f64, f64)],
    metric_name: &str,
) -> Result<(), CliError> {
    let mut out = format!("lambda,{metric_name}\n");
    for (lambda, metric) in rows {
        let _ = writeln!(out, "{lambda},{metric}");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Serializes a result document, stamping in the name of the manifest that
/// records its provenance.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut doc = serde_json::to_value(value)?;
    if let Some(map) = doc.as_object_mut() {
        map.insert("manifest".to_string(), serde_json::Value::from("manifest.jsonl"));
    }
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Emits the per-lambda x matrices and the path summary JSON; returns the
/// written record for further embedding.
pub fn write_path_outputs(
    out_dir: &Path,
    path_result: &PathResult,
    mode: &PathMode,
    cfg: &SolverConfig,
    metrics: Option<&[Option<f64>]>,
) -> Result<PathRecord, CliError> {
    let mut points = Vec::with_capacity(path_result.points.len());
    for (idx, point) in path_result.points.iter().enumerate() {
        let x_csv = format!("x_{idx:04}.csv");
        write_x_csv(&out_dir.join(&x_csv), point.result.x())?;
        points.push(PathPointRecord {
            lambda: point.lambda,
            objective: point.result.objective,
            iterations: point.result.iterations,
            converged: point.result.converged,
            n_clusters: point.n_clusters,
            metric: metrics.and_then(|m| m[idx]),
            best_iter: point.result.best_iter,
            x_csv,
        });
    }
    let record = PathRecord {
        mode: mode_name(mode).to_string(),
        lambda_critical_est: path_result.lambda_critical_est,
        consensus_x: path_result.consensus_x.clone(),
        diagnostics: path_result.diagnostics.clone(),
        points,
        config: cfg.into(),
    };
    write_json(&out_dir.join("path.json"), &record)?;
    Ok(record)
}

#[derive(Debug, Serialize)]
pub struct InputFingerprint {
    pub path: String,
    pub sha256: String,
}

/// Append-only run manifest: one JSON line per command invocation. Timings
/// are omitted in deterministic mode so reruns are bit-identical.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub inputs: Vec<InputFingerprint>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<std::collections::BTreeMap<String, u128>>,
}

pub struct ManifestBuilder {
    command: String,
    seed: u64,
    deterministic: bool,
    inputs: Vec<InputFingerprint>,
    outputs: Vec<String>,
    timings: std::collections::BTreeMap<String, u128>,
    started: Instant,
    phase: Option<(String, Instant)>,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: u64, deterministic: bool) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            seed,
            deterministic,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: Default::default(),
            started: Instant::now(),
            phase: None,
        }
    }

    pub fn fingerprint_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        self.inputs.push(InputFingerprint {
            path: path.display().to_string(),
            sha256: format!("{:x}", hasher.finalize()),
        });
        Ok(())
    }

    pub fn begin_phase(&mut self, name: &str) {
        self.end_phase();
        self.phase = Some((name.to_string(), Instant::now()));
    }

    pub fn end_phase(&mut self) {
        if let Some((name, start)) = self.phase.take() {
            self.timings.insert(name, start.elapsed().as_millis());
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(mut self, out_dir: &Path) -> Result<(), CliError> {
        self.end_phase();
        self.timings.insert("total".to_string(), self.started.elapsed().as_millis());
        let manifest = Manifest {
            command: self.command,
            argv: std::env::args().collect(),
            seed: self.seed,
            inputs: self.inputs,
            outputs: self.outputs,
            timings_ms: if self.deterministic { None } else { Some(self.timings) },
        };
        let mut line = serde_json::to_string(&manifest)?;
        line.push('\n');
        let path = out_dir.join("manifest.jsonl");
        use std::io::Write;
        let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
        file.write_all(line.as_bytes())?;
        Ok(())
    }
}

pub fn ensure_out_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}

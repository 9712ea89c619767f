//! Synthetic networked-classification benchmark: nodes in groups share an
//! underlying separating hyperplane, each node sees only a small private
//! training set, and edges are dense within groups and sparse across them.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::DatasetError;
use crate::graph::{build_graph, ProblemGraph};
use crate::objectives::SvmObjective;

#[derive(Debug, Clone)]
pub struct SvmBenchmarkSpec {
    pub n_nodes: usize,
    pub n_groups: usize,
    /// Feature dimension; the node variable has one extra bias coordinate.
    pub dim: usize,
    pub train_per_node: usize,
    pub test_per_node: usize,
    /// Edge probability inside a group.
    pub p_intra: f64,
    /// Edge probability across groups.
    pub p_inter: f64,
    pub noise_sd: f64,
    /// Hinge slack penalty `c` of the node SVMs.
    pub slack_penalty: f64,
    pub seed: u64,
}

impl Default for SvmBenchmarkSpec {
    fn default() -> Self {
        SvmBenchmarkSpec {
            n_nodes: 1000,
            n_groups: 20,
            dim: 50,
            train_per_node: 25,
            test_per_node: 10,
            p_intra: 0.5,
            p_inter: 0.01,
            noise_sd: 1.0,
            slack_penalty: 0.75,
            seed: 0,
        }
    }
}

impl SvmBenchmarkSpec {
    /// Desk-scale variant: same group size, fewer groups.
    pub fn desk_scale(seed: u64) -> Self {
        SvmBenchmarkSpec { n_nodes: 200, n_groups: 4, seed, ..Default::default() }
    }

    fn validate(&self) -> Result<(), DatasetError> {
        if self.n_groups == 0 || self.n_nodes % self.n_groups != 0 {
            return Err(DatasetError::BadSpec(format!(
                "n_nodes ({}) must be divisible by n_groups ({})",
                self.n_nodes, self.n_groups
            )));
        }
        for (name, p) in [("p_intra", self.p_intra), ("p_inter", self.p_inter)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(DatasetError::BadSpec(format!("{name} must be in [0,1], got {p}")));
            }
        }
        if self.dim == 0 || self.train_per_node == 0 {
            return Err(DatasetError::BadSpec("dim and train_per_node must be positive".into()));
        }
        Ok(())
    }

    /// Expected edge count of the random graph.
    pub fn expected_edges(&self) -> f64 {
        let m = self.n_nodes as f64;
        let per_group = (self.n_nodes / self.n_groups) as f64;
        let intra_pairs = self.n_groups as f64 * per_group * (per_group - 1.0) / 2.0;
        let all_pairs = m * (m - 1.0) / 2.0;
        self.p_intra * intra_pairs + self.p_inter * (all_pairs - intra_pairs)
    }
}

/// Per-node held-out examples.
#[derive(Debug, Clone)]
pub struct NodeTestSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

#[derive(Debug)]
pub struct SvmBenchmark {
    pub graph: ProblemGraph,
    pub tests: Vec<NodeTestSet>,
    /// True group of each node.
    pub groups: Vec<usize>,
    /// Fraction of edges connecting nodes of different groups.
    pub inter_group_edge_fraction: f64,
}

/// Draws the benchmark: one hyperplane `(a, a_0)` per group, i.i.d. standard
/// normal features, labels `y = sgn(a . w + a_0 + v)` with fresh noise per
/// example, and independent edge coin flips at `p_intra`/`p_inter`.
pub fn gen_svm_benchmark(spec: &SvmBenchmarkSpec) -> Result<SvmBenchmark, DatasetError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let per_group = spec.n_nodes / spec.n_groups;
    let groups: Vec<usize> = (0..spec.n_nodes).map(|i| i / per_group).collect();

    let hyperplanes: Vec<(Vec<f64>, f64)> = (0..spec.n_groups)
        .map(|_| {
            let a: Vec<f64> = (0..spec.dim).map(|_| rng.sample(StandardNormal)).collect();
            let a0: f64 = rng.sample(StandardNormal);
            (a, a0)
        })
        .collect();

    let draw_sample = |rng: &mut ChaCha8Rng, group: usize| -> (Vec<f64>, f64) {
        let (a, a0) = &hyperplanes[group];
        let w: Vec<f64> = (0..spec.dim).map(|_| rng.sample(StandardNormal)).collect();
        let noise: f64 = rng.sample::<f64, _>(StandardNormal) * spec.noise_sd;
        let score = crate::vecmath::dot(a, &w) + a0 + noise;
        let y = if score >= 0.0 { 1.0 } else { -1.0 };
        (w, y)
    };

    let mut objectives: Vec<Box<dyn crate::objectives::NodeObjective>> =
        Vec::with_capacity(spec.n_nodes);
    let mut tests = Vec::with_capacity(spec.n_nodes);
    for i in 0..spec.n_nodes {
        let mut features = Vec::with_capacity(spec.train_per_node);
        let mut labels = Vec::with_capacity(spec.train_per_node);
        for _ in 0..spec.train_per_node {
            let (w, y) = draw_sample(&mut rng, groups[i]);
            features.push(w);
            labels.push(y);
        }
        objectives.push(Box::new(SvmObjective::new(features, labels, spec.slack_penalty)));
        let mut test_features = Vec::with_capacity(spec.test_per_node);
        let mut test_labels = Vec::with_capacity(spec.test_per_node);
        for _ in 0..spec.test_per_node {
            let (w, y) = draw_sample(&mut rng, groups[i]);
            test_features.push(w);
            test_labels.push(y);
        }
        tests.push(NodeTestSet { features: test_features, labels: test_labels });
    }

    let mut edges = Vec::new();
    let mut inter = 0usize;
    for j in 0..spec.n_nodes {
        for k in j + 1..spec.n_nodes {
            let p = if groups[j] == groups[k] { spec.p_intra } else { spec.p_inter };
            if rng.gen_bool(p) {
                edges.push((j, k, 1.0));
                if groups[j] != groups[k] {
                    inter += 1;
                }
            }
        }
    }
    let inter_fraction = if edges.is_empty() { 0.0 } else { inter as f64 / edges.len() as f64 };

    let mut graph = build_graph(spec.n_nodes, spec.dim + 1, &edges)?;
    graph.set_objectives(objectives).expect("one objective per node");
    Ok(SvmBenchmark { graph, tests, groups, inter_group_edge_fraction: inter_fraction })
}

/// Test-set prediction accuracy of per-node hyperplanes `x`.
pub fn svm_accuracy(bench: &SvmBenchmark, x: &crate::graph::VectorList) -> f64 {
    let mut correct = 0usize;
    let mut total = 0usize;
    for (i, t) in bench.tests.iter().enumerate() {
        let xi = x.row(i);
        for (w, y) in t.features.iter().zip(&t.labels) {
            let pred = if SvmObjective::decision(xi, w) >= 0.0 { 1.0 } else { -1.0 };
            if pred == *y {
                correct += 1;
            }
            total += 1;
        }
    }
    correct as f64 / total as f64
}

//! The problem instance: an immutable undirected weighted graph with one
//! variable (a vector in R^p) and one objective per node.
//!
//! Edges are stored once in canonical form `(j, k)` with `j < k`. The ADMM
//! state attached to an edge (two copies and two scaled duals) lives in the
//! solver's [`crate::solver::SolverState`], keyed by edge index, so the graph
//! itself stays read-only during a solve and can be shared across workers.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::objectives::{NodeObjective, ZeroObjective};

/// A list of equal-length vectors stored contiguously, one row per item.
///
/// Used for node variables (`m x p`) and per-edge copies/duals (`n x p`).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorList {
    data: Vec<f64>,
    dim: usize,
}

impl VectorList {
    pub fn zeros(count: usize, dim: usize) -> Self {
        VectorList {
            data: vec![0.0; count * dim],
            dim,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == dim));
        VectorList {
            data: rows.concat(),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn copy_from(&mut self, other: &VectorList) {
        self.data.copy_from_slice(&other.data);
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    /// Euclidean norm of the whole list viewed as one stacked vector.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// One undirected edge in canonical form (`lo < hi`) with weight `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRecord {
    pub lo: usize,
    pub hi: usize,
    pub weight: f64,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("variable dimension p must be positive")]
    ZeroDim,
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1}) after canonicalization")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0}, {1}) has invalid weight {2} (must be finite and >= 0)")]
    BadWeight(usize, usize, f64),
    #[error("edge endpoint {0} out of range (node count {1})")]
    NodeOutOfRange(usize, usize),
    #[error("objective count {0} does not match node count {1}")]
    ObjectiveCount(usize, usize),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable problem instance: topology, weights, dimension and objectives.
pub struct ProblemGraph {
    p: usize,
    edges: Vec<EdgeRecord>,
    /// Per node: incident `(neighbor, edge index)` pairs, ascending by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
    objectives: Vec<Box<dyn NodeObjective>>,
}

impl std::fmt::Debug for ProblemGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ProblemGraph(m={}, n={}, p={})",
            self.node_count(),
            self.edge_count(),
            self.p
        )
    }
}

impl ProblemGraph {
    /// Number of nodes `m`.
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of edges `n`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Variable dimension `p`, shared by all nodes.
    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> EdgeRecord {
        self.edges[e]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Incident edges of node `i` as `(neighbor, weight, edge index)`,
    /// ascending by neighbor index.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        self.adjacency[i]
            .iter()
            .map(move |&(nbr, e)| (nbr, self.edges[e].weight, e))
    }

    pub fn objective(&self, i: usize) -> &dyn NodeObjective {
        self.objectives[i].as_ref()
    }

    pub fn objectives(&self) -> &[Box<dyn NodeObjective>] {
        &self.objectives
    }

    /// Replaces all node objectives at once.
    pub fn set_objectives(
        &mut self,
        objectives: Vec<Box<dyn NodeObjective>>,
    ) -> Result<(), GraphError> {
        if objectives.len() != self.node_count() {
            return Err(GraphError::ObjectiveCount(
                objectives.len(),
                self.node_count(),
            ));
        }
        self.objectives = objectives;
        Ok(())
    }

    pub fn set_objective(&mut self, i: usize, objective: Box<dyn NodeObjective>) {
        self.objectives[i] = objective;
    }
}

/// Builds a canonicalized problem graph. Each input edge `(j, k, w)` is
/// stored as `(min, max)`; self-loops, duplicates (in either orientation)
/// and negative or non-finite weights are rejected. All node objectives
/// start as the zero function.
pub fn build_graph(
    node_count: usize,
    p: usize,
    edges: &[(usize, usize, f64)],
) -> Result<ProblemGraph, GraphError> {
    if node_count == 0 {
        return Err(GraphError::Empty);
    }
    if p == 0 {
        return Err(GraphError::ZeroDim);
    }
    let mut records = Vec::with_capacity(edges.len());
    for &(j, k, w) in edges {
        if j >= node_count {
            return Err(GraphError::NodeOutOfRange(j, node_count));
        }
        if k >= node_count {
            return Err(GraphError::NodeOutOfRange(k, node_count));
        }
        if j == k {
            return Err(GraphError::SelfLoop(j));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(GraphError::BadWeight(j, k, w));
        }
        records.push(EdgeRecord {
            lo: j.min(k),
            hi: j.max(k),
            weight: w,
        });
    }
    records.sort_by_key(|e| (e.lo, e.hi));
    for pair in records.windows(2) {
        if pair[0].lo == pair[1].lo && pair[0].hi == pair[1].hi {
            return Err(GraphError::DuplicateEdge(pair[0].lo, pair[0].hi));
        }
    }
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); node_count];
    for (e, rec) in records.iter().enumerate() {
        adjacency[rec.lo].push((rec.hi, e));
        adjacency[rec.hi].push((rec.lo, e));
    }
    for list in &mut adjacency {
        list.sort_unstable_by_key(|&(nbr, _)| nbr);
    }
    let objectives = (0..node_count)
        .map(|_| Box::new(ZeroObjective) as Box<dyn NodeObjective>)
        .collect();
    Ok(ProblemGraph {
        p,
        edges: records,
        adjacency,
        objectives,
    })
}

/// Parses the edge-list text format:
///
/// ```text
/// # comment
/// NODES m DIM p
/// j<TAB>k<TAB>w
/// ```
pub fn parse_edge_list<R: Read>(reader: R, path: &str) -> Result<ProblemGraph, GraphError> {
    let buf = BufReader::new(reader);
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (idx, line) in buf.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let err = |msg: String| GraphError::Parse {
            path: path.to_string(),
            line: lineno,
            msg,
        };
        if header.is_none() {
            let fields: Vec<&str> = text.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "NODES" || fields[2] != "DIM" {
                return Err(err(format!("expected header `NODES m DIM p`, got `{text}`")));
            }
            let m = fields[1]
                .parse::<usize>()
                .map_err(|e| err(format!("bad node count: {e}")))?;
            let p = fields[3]
                .parse::<usize>()
                .map_err(|e| err(format!("bad dimension: {e}")))?;
            header = Some((m, p));
            continue;
        }
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(err(format!(
                "expected `j<TAB>k<TAB>w`, got {} field(s)",
                fields.len()
            )));
        }
        let j = fields[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| err(format!("bad node index `{}`: {e}", fields[0])))?;
        let k = fields[1]
            .trim()
            .parse::<usize>()
            .map_err(|e| err(format!("bad node index `{}`: {e}", fields[1])))?;
        let w = fields[2]
            .trim()
            .parse::<f64>()
            .map_err(|e| err(format!("bad weight `{}`: {e}", fields[2])))?;
        edges.push((j, k, w));
    }
    let (m, p) = header.ok_or_else(|| GraphError::Parse {
        path: path.to_string(),
        line: 0,
        msg: "missing `NODES m DIM p` header".to_string(),
    })?;
    build_graph(m, p, &edges)
}

pub fn read_edge_list(path: &Path) -> Result<ProblemGraph, GraphError> {
    let file = std::fs::File::open(path)?;
    parse_edge_list(file, &path.display().to_string())
}

pub fn write_edge_list<W: Write>(g: &ProblemGraph, mut writer: W) -> std::io::Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "NODES {} DIM {}", g.node_count(), g.dim());
    for e in g.edges() {
        let _ = writeln!(out, "{}\t{}\t{}", e.lo, e.hi, e.weight);
    }
    writer.write_all(out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::QuadraticObjective;

    #[test]
    fn builds_smallest_nontrivial_graph() {
        let g = build_graph(2, 1, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge(0), EdgeRecord { lo: 0, hi: 1, weight: 1.0 });
    }

    #[test]
    fn rejects_duplicate_after_canonicalization() {
        let err = build_graph(3, 2, &[(0, 1, 1.0), (1, 0, 2.0)]).unwrap_err();
        assert!(matches!(err, GraphError::DuplicateEdge(0, 1)));
    }

    #[test]
    fn rejects_self_loop_and_bad_weight() {
        assert!(matches!(
            build_graph(2, 1, &[(1, 1, 1.0)]),
            Err(GraphError::SelfLoop(1))
        ));
        assert!(matches!(
            build_graph(2, 1, &[(0, 1, -0.5)]),
            Err(GraphError::BadWeight(0, 1, _))
        ));
        assert!(matches!(
            build_graph(2, 1, &[(0, 2, 1.0)]),
            Err(GraphError::NodeOutOfRange(2, 2))
        ));
    }

    #[test]
    fn neighbors_of_path_graph() {
        let g = build_graph(3, 1, &[(1, 2, 2.0), (0, 1, 1.0)]).unwrap();
        let nbrs: Vec<(usize, f64, usize)> = g.neighbors(1).collect();
        assert_eq!(nbrs.len(), 2);
        assert_eq!((nbrs[0].0, nbrs[0].1), (0, 1.0));
        assert_eq!((nbrs[1].0, nbrs[1].1), (2, 2.0));
        assert_eq!(g.neighbors(0).count(), 1);
    }

    #[test]
    fn isolated_node_has_no_neighbors() {
        let g = build_graph(3, 1, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(g.neighbors(2).count(), 0);
        assert_eq!(g.degree(2), 0);
    }

    #[test]
    fn neighbor_lists_sum_to_twice_edge_count() {
        let g = build_graph(6, 2, &[(0, 1, 1.0), (0, 2, 1.0), (3, 4, 0.5), (1, 2, 2.0)]).unwrap();
        let total: usize = (0..g.node_count()).map(|i| g.neighbors(i).count()).sum();
        assert_eq!(total, 2 * g.edge_count());
    }

    #[test]
    fn edge_list_round_trip_and_errors() {
        let text = "# toy\nNODES 3 DIM 2\n0\t1\t1.5\n1\t2\t0.25\n";
        let g = parse_edge_list(text.as_bytes(), "toy").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.dim(), 2);
        assert_eq!(g.edge_count(), 2);

        let mut out = Vec::new();
        write_edge_list(&g, &mut out).unwrap();
        let again = parse_edge_list(out.as_slice(), "roundtrip").unwrap();
        assert_eq!(again.edges(), g.edges());

        let bad = parse_edge_list("NODES 2 DIM 1\n0 1 1.0\n".as_bytes(), "bad");
        match bad {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn objectives_replaceable() {
        let mut g = build_graph(2, 1, &[(0, 1, 1.0)]).unwrap();
        g.set_objective(0, Box::new(QuadraticObjective::new(vec![3.0])));
        assert_eq!(g.objective(0).evaluate(&[3.0]), 0.0);
        assert_eq!(g.objective(1).evaluate(&[42.0]), 0.0);
        assert!(g
            .set_objectives(vec![Box::new(ZeroObjective)])
            .is_err());
    }
}

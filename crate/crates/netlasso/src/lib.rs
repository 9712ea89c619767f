//! Network lasso: simultaneous clustering and optimization on graphs.
//!
//! This crate solves problems of the form
//!
//! ```text
//! minimize  sum_i f_i(x_i) + lambda * sum_{(j,k) in E} w_jk * ||x_j - x_k||_2
//! ```
//!
//! where every node `i` of an undirected weighted graph carries a convex cost
//! `f_i` over its own variable `x_i` in R^p, and the edge penalty (a group
//! lasso on differences) drives adjacent nodes into *consensus*: above a
//! finite critical `lambda` all nodes share one solution, and in between the
//! nodes split into clusters with a common model per cluster.
//!
//! The solver is an ADMM scheme whose x-update is a per-node proximal step,
//! whose z-update has a closed form per edge, and whose sweeps run in
//! parallel with bulk-synchronous barriers. On top of it sit:
//!
//! * [`nonconvex`] — a concave (log) edge penalty variant with best-iterate
//!   tracking,
//! * [`path`] — a regularization-path driver with warm starts and automatic
//!   detection of the consensus endpoint,
//! * [`inference`] — held-out-node prediction via the weighted geometric
//!   median (Weber problem) of the neighbors' solutions,
//! * [`datasets`] — generators and loaders for the classification,
//!   housing-regression and event-detection experiment pipelines.

pub mod datasets;
pub mod graph;
pub mod inference;
pub mod nonconvex;
pub mod objectives;
pub mod path;
pub mod solver;
mod vecmath;

pub use graph::{build_graph, EdgeRecord, GraphError, ProblemGraph, VectorList};
pub use objectives::{
    EventObjective, NodeObjective, ProxError, QuadraticObjective, RegressionObjective,
    SvmObjective, ZeroObjective,
};
pub use solver::{solve, SolverConfig, SolverError, SolverResult, SolverState};

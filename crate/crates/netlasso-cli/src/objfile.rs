//! JSON objectives file: one entry per graph node.
//!
//! ```json
//! {
//!   "p": 2,
//!   "nodes": [
//!     {"type": "quadratic", "target": [1.0, 0.5]},
//!     {"type": "zero"},
//!     {"type": "event", "xbar": [0.0, 0.1], "mu": 0.4},
//!     {"type": "regression", "beds": 0.1, "baths": -0.2, "sqft": 1.1,
//!      "price": 0.9, "mu": 0.5},
//!     {"type": "svm", "c": 0.75, "features": [[0.2, -1.0]], "labels": [1.0]}
//!   ]
//! }
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::error::CliError;
use netlasso::objectives::{
    EventObjective, NodeObjective, QuadraticObjective, RegressionObjective, SvmObjective,
    ZeroObjective,
};

#[derive(Debug, Deserialize)]
pub struct ObjectivesFile {
    pub p: usize,
    pub nodes: Vec<ObjectiveSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Quadratic { target: Vec<f64> },
    Zero,
    Event { xbar: [f64; 2], mu: f64 },
    Regression { beds: f64, baths: f64, sqft: f64, price: f64, mu: f64 },
    Svm { c: f64, features: Vec<Vec<f64>>, labels: Vec<f64> },
}

impl ObjectiveSpec {
    fn build(&self, p: usize, node: usize) -> Result<Box<dyn NodeObjective>, CliError> {
        let bad = |msg: String| CliError::Parse(format!("objective for node {node}: {msg}"));
        match self {
            ObjectiveSpec::Quadratic { target } => {
                if target.len() != p {
                    return Err(bad(format!("target has length {}, expected {p}", target.len())));
                }
                Ok(Box::new(QuadraticObjective::new(target.clone())))
            }
            ObjectiveSpec::Zero => Ok(Box::new(ZeroObjective)),
            ObjectiveSpec::Event { xbar, mu } => {
                if p != 2 {
                    return Err(bad(format!("event objectives need p = 2, graph has p = {p}")));
                }
                if *mu < 0.0 {
                    return Err(bad("mu must be >= 0".to_string()));
                }
                Ok(Box::new(EventObjective::new(*xbar, *mu)))
            }
            ObjectiveSpec::Regression { beds, baths, sqft, price, mu } => {
                if p != 4 {
                    return Err(bad(format!("regression objectives need p = 4, graph has p = {p}")));
                }
                if *mu < 0.0 {
                    return Err(bad("mu must be >= 0".to_string()));
                }
                Ok(Box::new(RegressionObjective::new(*beds, *baths, *sqft, *price, *mu)))
            }
            ObjectiveSpec::Svm { c, features, labels } => {
                if features.len() != labels.len() {
                    return Err(bad("features and labels disagree in length".to_string()));
                }
                let dim = features.first().map_or(0, Vec::len);
                if features.iter().any(|row| row.len() != dim) {
                    return Err(bad("feature rows have mixed lengths".to_string()));
                }
                if dim + 1 != p {
                    return Err(bad(format!("svm features of dim {dim} need p = {}, graph has p = {p}", dim + 1)));
                }
                if !labels.iter().all(|y| *y == 1.0 || *y == -1.0) {
                    return Err(bad("labels must be +1 or -1".to_string()));
                }
                if *c < 0.0 {
                    return Err(bad("c must be >= 0".to_string()));
                }
                Ok(Box::new(SvmObjective::new(features.clone(), labels.clone(), *c)))
            }
        }
    }
}

/// Parses the objectives file and attaches its objectives to the graph.
pub fn load_objectives(
    path: &Path,
    graph: &mut netlasso::ProblemGraph,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let file: ObjectivesFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    if file.p != graph.dim() {
        return Err(CliError::Parse(format!(
            "{}: objectives declare p = {}, graph has p = {}",
            path.display(),
            file.p,
            graph.dim()
        )));
    }
    if file.nodes.len() != graph.node_count() {
        return Err(CliError::Parse(format!(
            "{}: {} objectives for {} nodes",
            path.display(),
            file.nodes.len(),
            graph.node_count()
        )));
    }
    let objectives = file
        .nodes
        .iter()
        .enumerate()
        .map(|(i, spec)| spec.build(file.p, i))
        .collect::<Result<Vec<_>, _>>()?;
    graph
        .set_objectives(objectives)
        .map_err(|e| CliError::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use netlasso::build_graph;
    use std::io::Write;

    #[test]
    fn parses_mixed_objectives() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(
            file,
            r#"{{"p": 2, "nodes": [
                {{"type": "quadratic", "target": [1.0, 2.0]}},
                {{"type": "zero"}},
                {{"type": "event", "xbar": [0.5, -0.5], "mu": 0.1}}
            ]}}"#
        )
        .unwrap();
        let mut g = build_graph(3, 2, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        load_objectives(file.path(), &mut g).unwrap();
        assert_eq!(g.objective(0).evaluate(&[1.0, 2.0]), 0.0);
        assert_eq!(g.objective(1).evaluate(&[9.0, 9.0]), 0.0);
    }

    #[test]
    fn rejects_wrong_count_and_dim() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(file, r#"{{"p": 2, "nodes": [{{"type": "zero"}}]}}"#).unwrap();
        let mut g = build_graph(2, 2, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            load_objectives(file.path(), &mut g),
            Err(CliError::Parse(_))
        ));

        let mut file2 = tempfile::NamedTempFile::new().unwrap();
        write!(
            file2,
            r#"{{"p": 3, "nodes": [{{"type": "zero"}}, {{"type": "zero"}}]}}"#
        )
        .unwrap();
        assert!(matches!(
            load_objectives(file2.path(), &mut g),
            Err(CliError::Parse(_))
        ));
    }
}

//! Random d-regular simple graphs via the configuration model with
//! rejection, used by the scaling benchmark.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::DatasetError;

/// Unit-weight edge list of a uniform-ish random `degree`-regular simple
/// graph on `nodes` vertices. `nodes * degree` must be even.
pub fn gen_regular_graph(
    nodes: usize,
    degree: usize,
    seed: u64,
) -> Result<Vec<(usize, usize, f64)>, DatasetError> {
    if nodes == 0 || degree == 0 {
        return Err(DatasetError::BadSpec("nodes and degree must be positive".into()));
    }
    if degree >= nodes {
        return Err(DatasetError::BadSpec(format!(
            "degree {degree} impossible with {nodes} nodes"
        )));
    }
    if (nodes * degree) % 2 != 0 {
        return Err(DatasetError::BadSpec(format!(
            "nodes * degree must be even, got {nodes} * {degree}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..nodes).flat_map(|i| std::iter::repeat(i).take(degree)).collect();
    // Pair shuffled stubs; redraw on self-loops or duplicates. For small
    // fixed degree the per-attempt success probability is bounded away from
    // zero, so a few hundred tries is already far beyond what's needed.
    for _ in 0..10_000 {
        stubs.shuffle(&mut rng);
        let mut seen = std::collections::HashSet::with_capacity(nodes * degree / 2);
        let mut edges = Vec::with_capacity(nodes * degree / 2);
        let mut ok = true;
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                ok = false;
                break;
            }
            edges.push((a, b, 1.0));
        }
        if ok {
            edges.sort_unstable_by_key(|&(a, b, _)| (a, b));
            return Ok(edges);
        }
    }
    Err(DatasetError::BadSpec(format!(
        "could not realize a simple {degree}-regular graph on {nodes} nodes"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    #[test]
    fn every_node_has_the_requested_degree() {
        let edges = gen_regular_graph(50, 3, 7).unwrap();
        let g = build_graph(50, 1, &edges).unwrap();
        for i in 0..50 {
            assert_eq!(g.degree(i), 3, "node {i}");
        }
        assert_eq!(g.edge_count(), 50 * 3 / 2);
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let a = gen_regular_graph(40, 3, 1).unwrap();
        let b = gen_regular_graph(40, 3, 1).unwrap();
        let c = gen_regular_graph(40, 3, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_impossible_specs() {
        assert!(gen_regular_graph(5, 3, 0).is_err()); // odd stub count
        assert!(gen_regular_graph(3, 3, 0).is_err()); // degree >= nodes
        assert!(gen_regular_graph(0, 3, 0).is_err());
    }
}

//! Held-out-node prediction. A new node with known neighbors and edge
//! weights acts as a dummy node with zero cost, so its solution minimizes
//! `sum_k w_k ||x - x_k*||_2` over the neighbors' solved values — the
//! weighted geometric median (Weber problem).

use thiserror::Error;

use crate::graph::VectorList;
use crate::vecmath::{dist, norm};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("a Weber instance needs at least one anchor")]
    NoAnchors,
    #[error("anchor weights must be positive and finite, got {0}")]
    BadWeight(f64),
    #[error("anchor {0} has dimension {1}, expected {2}")]
    DimMismatch(usize, usize, usize),
}

/// Weighted anchors of one Weber problem.
#[derive(Debug, Clone)]
pub struct WeberInstance {
    anchors: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl WeberInstance {
    pub fn new(anchors: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, InferenceError> {
        if anchors.is_empty() || anchors.len() != weights.len() {
            return Err(InferenceError::NoAnchors);
        }
        let dim = anchors[0].len();
        for (i, a) in anchors.iter().enumerate() {
            if a.len() != dim {
                return Err(InferenceError::DimMismatch(i, a.len(), dim));
            }
        }
        for &w in &weights {
            if !(w > 0.0 && w.is_finite()) {
                return Err(InferenceError::BadWeight(w));
            }
        }
        Ok(WeberInstance { anchors, weights })
    }

    pub fn anchor_count(&self) -> usize {
        self.anchors.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.anchors
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| w * dist(x, a))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct WeberSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// False when the iteration cap was hit; `x` is the best iterate seen.
    pub converged: bool,
}

pub const WEBER_DEFAULT_TOL: f64 = 1e-8;
pub const WEBER_DEFAULT_MAX_ITER: usize = 1000;

/// Minimizes `sum_k w_k ||x - a_k||` by a safeguarded fixed-point iteration.
///
/// One anchor returns that anchor; two anchors return the heavier one (the
/// midpoint on an exact tie). With three or more, the iterate is the
/// weighted-inverse-distance average of the anchors; when it lands on an
/// anchor `a_k`, the subgradient-ball test keeps it there iff
/// `||sum_{i != k} w_i (a_i - a_k)/||a_i - a_k|| || <= w_k`, and otherwise
/// steps off along the pull direction.
pub fn weber_solve(inst: &WeberInstance, tol: f64, max_iter: usize) -> WeberSolution {
    let dim = inst.anchors[0].len();
    match inst.anchor_count() {
        1 => {
            return WeberSolution { x: inst.anchors[0].clone(), iterations: 0, converged: true }
        }
        2 => {
            let (a0, a1) = (&inst.anchors[0], &inst.anchors[1]);
            let (w0, w1) = (inst.weights[0], inst.weights[1]);
            let x = if w0 > w1 {
                a0.clone()
            } else if w1 > w0 {
                a1.clone()
            } else {
                a0.iter().zip(a1).map(|(p, q)| 0.5 * (p + q)).collect()
            };
            return WeberSolution { x, iterations: 0, converged: true };
        }
        _ => {}
    }

    let scale = inst
        .anchors
        .iter()
        .map(|a| norm(a))
        .fold(0.0f64, f64::max)
        .max(1.0);
    let snap = 1e-13 * scale;

    // Start at the weighted centroid.
    let total_weight: f64 = inst.weights.iter().sum();
    let mut x = vec![0.0; dim];
    for (a, w) in inst.anchors.iter().zip(&inst.weights) {
        for t in 0..dim {
            x[t] += w * a[t];
        }
    }
    for v in x.iter_mut() {
        *v /= total_weight;
    }

    let mut next = vec![0.0; dim];
    for iter in 1..=max_iter {
        // Weiszfeld sums over anchors away from x; `pull` is the subgradient
        // of the distant anchors and `eta` the weight of a coincident one.
        let mut sum_wd = 0.0;
        let mut eta = 0.0;
        next.fill(0.0);
        let mut pull = vec![0.0; dim];
        for (a, &w) in inst.anchors.iter().zip(&inst.weights) {
            let d = dist(&x, a);
            if d <= snap {
                eta += w;
                continue;
            }
            let inv = w / d;
            sum_wd += inv;
            for t in 0..dim {
                next[t] += inv * a[t];
                pull[t] += inv * (a[t] - x[t]);
            }
        }
        if sum_wd == 0.0 {
            // All anchors coincide with x.
            return WeberSolution { x, iterations: iter, converged: true };
        }
        let r = norm(&pull);
        if eta > 0.0 && r <= eta {
            // Sitting on an anchor heavy enough to be optimal.
            return WeberSolution { x, iterations: iter, converged: true };
        }
        for t in 0..dim {
            next[t] /= sum_wd;
        }
        if eta > 0.0 {
            // Vardi-Zhang step away from a non-optimal anchor.
            let mix = (eta / r).min(1.0);
            for t in 0..dim {
                next[t] = (1.0 - mix) * next[t] + mix * x[t];
            }
        }
        let step = dist(&next, &x);
        x.copy_from_slice(&next);
        if step <= tol * scale.max(norm(&x)) {
            return WeberSolution { x, iterations: iter, converged: true };
        }
    }
    WeberSolution { x, iterations: max_iter, converged: false }
}

/// Predicts a value for a held-out node: builds the Weber instance from the
/// training solutions of the given `(train node id, weight)` neighbors,
/// solves it, and applies `predictor` to the resulting variable.
pub fn predict_node(
    x_star: &VectorList,
    neighbors: &[(usize, f64)],
    predictor: impl FnOnce(&[f64]) -> f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64, InferenceError> {
    let inst = weber_instance_from_neighbors(x_star, neighbors)?;
    let solution = weber_solve(&inst, tol, max_iter);
    Ok(predictor(&solution.x))
}

pub fn weber_instance_from_neighbors(
    x_star: &VectorList,
    neighbors: &[(usize, f64)],
) -> Result<WeberInstance, InferenceError> {
    let anchors: Vec<Vec<f64>> = neighbors.iter().map(|&(i, _)| x_star.row(i).to_vec()).collect();
    let weights: Vec<f64> = neighbors.iter().map(|&(_, w)| w).collect();
    WeberInstance::new(anchors, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn single_anchor_returned_exactly() {
        let inst = WeberInstance::new(vec![vec![1.0, 2.0]], vec![3.0]).unwrap();
        let sol = weber_solve(&inst, 1e-8, 100);
        assert_eq!(sol.x, vec![1.0, 2.0]);
        assert!(sol.converged);
    }

    #[test]
    fn two_anchors_heavier_wins_midpoint_on_tie() {
        let a = vec![vec![0.0], vec![2.0]];
        let heavy = weber_solve(&WeberInstance::new(a.clone(), vec![3.0, 1.0]).unwrap(), 1e-8, 100);
        assert_eq!(heavy.x, vec![0.0]);
        let other = weber_solve(&WeberInstance::new(a.clone(), vec![1.0, 4.0]).unwrap(), 1e-8, 100);
        assert_eq!(other.x, vec![2.0]);
        let tie = weber_solve(&WeberInstance::new(a, vec![2.0, 2.0]).unwrap(), 1e-8, 100);
        assert_eq!(tie.x, vec![1.0]);
    }

    #[test]
    fn collinear_equal_weights_pick_median() {
        let inst = WeberInstance::new(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let sol = weber_solve(&inst, 1e-10, 2000);
        assert!((sol.x[0] - 1.0).abs() < 1e-6, "got {}", sol.x[0]);
    }

    #[test]
    fn dominant_anchor_absorbs_solution() {
        // One anchor heavier than the rest combined is optimal itself.
        let inst = WeberInstance::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![5.0, 1.0, 1.0],
        )
        .unwrap();
        let sol = weber_solve(&inst, 1e-10, 2000);
        assert!(dist(&sol.x, &[0.0, 0.0]) < 1e-8);
    }

    #[test]
    fn objective_never_worse_than_any_anchor() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..50 {
            let n = rng.gen_range(3..=8);
            let p = rng.gen_range(1..=5);
            let anchors: Vec<Vec<f64>> = (0..n).map(|_| randn(&mut rng, p)).collect();
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
            let inst = WeberInstance::new(anchors.clone(), weights).unwrap();
            let sol = weber_solve(&inst, 1e-9, 2000);
            let ours = inst.objective(&sol.x);
            for a in &anchors {
                assert!(ours <= inst.objective(a) + 1e-7);
            }
            // Bounding-box membership (weak convex-hull test).
            for t in 0..p {
                let lo = anchors.iter().map(|a| a[t]).fold(f64::INFINITY, f64::min);
                let hi = anchors.iter().map(|a| a[t]).fold(f64::NEG_INFINITY, f64::max);
                assert!(sol.x[t] >= lo - 1e-9 && sol.x[t] <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn predict_node_shared_anchor_and_weighted_two_anchor() {
        let mut x = VectorList::zeros(3, 2);
        x.row_mut(0).copy_from_slice(&[1.0, 2.0]);
        x.row_mut(1).copy_from_slice(&[1.0, 2.0]);
        x.row_mut(2).copy_from_slice(&[5.0, 5.0]);

        // All neighbors share one solved value: prediction uses it exactly.
        let pred = predict_node(&x, &[(0, 1.0), (1, 2.0)], |v| v[0] + v[1], 1e-8, 100).unwrap();
        assert_eq!(pred, 3.0);

        // Two neighbors with weights 3 and 1: the heavier one's value.
        let pred = predict_node(&x, &[(0, 3.0), (2, 1.0)], |v| v[0], 1e-8, 100).unwrap();
        assert_eq!(pred, 1.0);

        assert!(predict_node(&x, &[], |v| v[0], 1e-8, 100).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            /// Shifting all anchors shifts the solution.
            #[test]
            fn translation_equivariance(seed in 0u64..10_000) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let n = rng.gen_range(3..=7);
                let p = rng.gen_range(1..=4);
                let anchors: Vec<Vec<f64>> = (0..n).map(|_| randn(&mut rng, p)).collect();
                let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
                let shift = randn(&mut rng, p);
                let shifted: Vec<Vec<f64>> = anchors
                    .iter()
                    .map(|a| a.iter().zip(&shift).map(|(v, s)| v + s).collect())
                    .collect();
                let sol = weber_solve(&WeberInstance::new(anchors, weights.clone()).unwrap(), 1e-10, 3000);
                let sol_shifted =
                    weber_solve(&WeberInstance::new(shifted, weights).unwrap(), 1e-10, 3000);
                let moved: Vec<f64> = sol.x.iter().zip(&shift).map(|(v, s)| v + s).collect();
                prop_assert!(dist(&moved, &sol_shifted.x) < 1e-5);
            }
        }
    }
}

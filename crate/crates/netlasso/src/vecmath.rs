//! Small dense-vector helpers shared by the solver and the objectives.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Solves the dense `n x n` system `mat * x = rhs` in place by Gaussian
/// elimination with partial pivoting; `mat` is row-major and gets destroyed.
/// Returns false if the matrix is numerically singular.
pub(crate) fn solve_dense(mat: &mut [f64], rhs: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(mat.len(), n * n);
    debug_assert_eq!(rhs.len(), n);
    for col in 0..n {
        let mut pivot = col;
        let mut best = mat[col * n + col].abs();
        for row in col + 1..n {
            let v = mat[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < 1e-14 {
            return false;
        }
        if pivot != col {
            for c in 0..n {
                mat.swap(col * n + c, pivot * n + c);
            }
            rhs.swap(col, pivot);
        }
        let diag = mat[col * n + col];
        for row in col + 1..n {
            let factor = mat[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                mat[row * n + c] -= factor * mat[col * n + c];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = rhs[col];
        for c in col + 1..n {
            acc -= mat[col * n + c] * rhs[c];
        }
        rhs[col] = acc / mat[col * n + col];
    }
    true
}

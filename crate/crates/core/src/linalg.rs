//! Small dense numerical helpers on top of nalgebra.

use nalgebra::DMatrix;

/// Rank counting singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 || !max.is_finite() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

pub fn rows_to_matrix(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Greedily picks rows that raise the numerical rank, up to `target`.
/// Returns the chosen row indices.
pub fn independent_rows(rows: &[Vec<f64>], ncols: usize, rel_tol: f64, target: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut picked: Vec<Vec<f64>> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if chosen.len() >= target {
            break;
        }
        picked.push(r.clone());
        if numerical_rank(&rows_to_matrix(&picked, ncols), rel_tol) == picked.len() {
            chosen.push(i);
        } else {
            picked.pop();
        }
    }
    chosen
}

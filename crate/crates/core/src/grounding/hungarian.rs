//! Kuhn-Munkres (Hungarian) assignment with row/column potentials, O(n²m).

use crate::model::SimilarityMatrix;

/// Maximum-total-similarity matching of size `min(rows, cols)`.
///
/// Pairs are returned sorted by row. A rectangular problem is equivalent to
/// padding the short side with zero-similarity dummies and dropping the
/// dummy pairs afterwards; the solver handles it directly instead.
pub fn kuhn_munkres(matrix: &SimilarityMatrix) -> Vec<(usize, usize)> {
    let (rows, cols) = (matrix.rows(), matrix.cols());
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let mut pairs = if rows <= cols {
        min_cost_assignment(rows, cols, |r, c| -matrix.get(r, c))
    } else {
        min_cost_assignment(cols, rows, |r, c| -matrix.get(c, r))
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect()
    };
    pairs.sort_unstable();
    pairs
}

/// Minimum-cost assignment of every row to a distinct column (`n <= m`).
fn min_cost_assignment(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    debug_assert!(n <= m);
    // 1-based; column 0 is a virtual column holding the row being inserted
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut min_slack = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=m {
                if used[col] {
                    continue;
                }
                let reduced = cost(r0 - 1, col - 1) - u[r0] - v[col];
                if reduced < min_slack[col] {
                    min_slack[col] = reduced;
                    way[col] = col0;
                }
                if min_slack[col] < delta {
                    delta = min_slack[col];
                    col1 = col;
                }
            }
            for col in 0..=m {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_slack[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        // augment along the alternating path
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    (1..=m)
        .filter(|&c| owner[c] != 0)
        .map(|c| (owner[c] - 1, c - 1))
        .collect()
}

//! Rectangular linear assignment.
//!
//! The solver is the shortest-augmenting-path form of the Hungarian method
//! with row and column potentials, run on the orientation with fewer rows.
//! Among all optimal assignments the one whose pair list, sorted by row, is
//! lexicographically smallest is returned, so results do not depend on the
//! internal visiting order.

use alloc::vec;
use alloc::vec::Vec;

/// Dense row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// # Panics
    ///
    /// When `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "cost matrix shape mismatch");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// Sum of the entries at `pairs`, accumulated in the given order.
    pub fn total(&self, pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().map(|&(i, j)| self.get(i, j)).sum()
    }

    fn scale(&self) -> f64 {
        self.data.iter().fold(1.0f64, |m, c| m.max(c.abs()))
    }
}

struct Solution {
    value: f64,
    /// `(row, col)` in the caller's index space.
    pairs: Vec<(usize, usize)>,
    /// Row potentials indexed like `rows`, column potentials like `cols`.
    row_pot: Vec<f64>,
    col_pot: Vec<f64>,
}

/// Optimal assignment restricted to the given row and column subsets.
///
/// Matches `min(rows.len(), cols.len())` pairs.
fn solve_subset(m: &CostMatrix, rows: &[usize], cols: &[usize]) -> Solution {
    if rows.len() <= cols.len() {
        solve_oriented(rows.len(), cols.len(), |r, c| m.get(rows[r], cols[c]), |r, c| (rows[r], cols[c]))
    } else {
        let mut s = solve_oriented(cols.len(), rows.len(), |r, c| m.get(rows[c], cols[r]), |r, c| (rows[c], cols[r]));
        core::mem::swap(&mut s.row_pot, &mut s.col_pot);
        s
    }
}

/// Hungarian method for `n <= m`: every one of the `n` rows gets a column.
fn solve_oriented(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64, to_pair: impl Fn(usize, usize) -> (usize, usize)) -> Solution {
    debug_assert!(n <= m);
    // 1-based; index 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            row_to_col[owner[j] - 1] = j - 1;
        }
    }
    let mut pairs: Vec<(usize, usize)> = row_to_col.iter().enumerate().map(|(r, &c)| to_pair(r, c)).collect();
    pairs.sort_unstable();
    let value = row_to_col.iter().enumerate().map(|(r, &c)| cost(r, c)).sum();
    Solution { value, pairs, row_pot: u[1..].to_vec(), col_pot: v[1..].to_vec() }
}

/// Minimum-cost assignment of `min(rows, cols)` pairs, sorted by row.
///
/// Ties between optimal assignments are broken towards the lexicographically
/// smallest sorted pair list. Costs within a relative `1e-11` of the optimum
/// count as ties.
pub fn solve(m: &CostMatrix) -> Vec<(usize, usize)> {
    if m.rows == 0 || m.cols == 0 {
        return Vec::new();
    }
    let rows: Vec<usize> = (0..m.rows).collect();
    let cols: Vec<usize> = (0..m.cols).collect();
    let best = solve_subset(m, &rows, &cols);
    let tol = 1e-11 * m.scale() * (m.rows.min(m.cols) as f64 + 1.0);
    let tight = |i: usize, j: usize| m.get(i, j) - best.row_pot[i] - best.col_pot[j] <= tol;

    if is_unique(m, &tight) {
        return best.pairs;
    }
    let pairs = canonical(m, best.value, tol, &tight);
    if pairs.len() == m.rows.min(m.cols) {
        pairs
    } else {
        best.pairs
    }
}

/// True when the tight-edge graph forces a single assignment: in the
/// orientation where every line is matched, each line has one tight edge.
fn is_unique(m: &CostMatrix, tight: &impl Fn(usize, usize) -> bool) -> bool {
    if m.rows <= m.cols {
        (0..m.rows).all(|i| (0..m.cols).filter(|&j| tight(i, j)).count() == 1)
    } else {
        (0..m.cols).all(|j| (0..m.rows).filter(|&i| tight(i, j)).count() == 1)
    }
}

/// Row-by-row greedy: give each row the smallest column that still admits an
/// optimal completion, or leave it unmatched when none does.
fn canonical(m: &CostMatrix, optimum: f64, tol: f64, tight: &impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let k = m.rows.min(m.cols);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(k);
    let mut free_cols: Vec<usize> = (0..m.cols).collect();
    let mut fixed_cost = 0.0;
    for i in 0..m.rows {
        if pairs.len() == k {
            break;
        }
        let rest_rows: Vec<usize> = (i + 1..m.rows).collect();
        let needed = k - pairs.len() - 1;
        let mut chosen = None;
        for (pos, &j) in free_cols.iter().enumerate() {
            if !tight(i, j) {
                continue;
            }
            let rest_cols: Vec<usize> = free_cols.iter().copied().filter(|&c| c != j).collect();
            if rest_rows.len().min(rest_cols.len()) != needed {
                continue;
            }
            let rest = if needed == 0 { 0.0 } else { solve_subset(m, &rest_rows, &rest_cols).value };
            if fixed_cost + m.get(i, j) + rest <= optimum + tol {
                chosen = Some(pos);
                break;
            }
        }
        if let Some(pos) = chosen {
            let j = free_cols.remove(pos);
            fixed_cost += m.get(i, j);
            pairs.push((i, j));
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sides() {
        assert!(solve(&CostMatrix::from_vec(0, 3, vec![])).is_empty());
        assert!(solve(&CostMatrix::from_vec(2, 0, vec![])).is_empty());
    }

    #[test]
    fn square_known_optimum() {
        // classic 3x3: optimum 1 + 2 + 2 = 5 via (0,1), (1,0), (2,2)
        let m = CostMatrix::from_vec(3, 3, vec![4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0]);
        let p = solve(&m);
        assert_eq!(p, vec![(0, 1), (1, 0), (2, 2)]);
        assert_eq!(m.total(&p), 5.0);
    }

    #[test]
    fn wide_and_tall() {
        let wide = CostMatrix::from_vec(2, 4, vec![5.0, 1.0, 9.0, 9.0, 9.0, 9.0, 9.0, 0.5]);
        assert_eq!(solve(&wide), vec![(0, 1), (1, 3)]);
        let tall = CostMatrix::from_fn(4, 2, |i, j| wide.get(j, i));
        assert_eq!(solve(&tall), vec![(1, 0), (3, 1)]);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let flat = CostMatrix::from_vec(3, 3, vec![1.0; 9]);
        assert_eq!(solve(&flat), vec![(0, 0), (1, 1), (2, 2)]);
        let tall = CostMatrix::from_vec(3, 2, vec![1.0; 6]);
        assert_eq!(solve(&tall), vec![(0, 0), (1, 1)]);
        // two optimal assignments of cost 2: {(0,0),(1,1)} and {(0,1),(1,0)}
        let two = CostMatrix::from_vec(2, 2, vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(solve(&two), vec![(0, 0), (1, 1)]);
        // row 0 unmatched is optimal only together with a worse row 0 pairing
        let skip = CostMatrix::from_vec(3, 1, vec![2.0, 1.0, 1.0]);
        assert_eq!(solve(&skip), vec![(1, 0)]);
    }

    #[test]
    fn negative_costs() {
        let m = CostMatrix::from_vec(2, 3, vec![-2.0, -1.0, 0.5, -1.5, -2.0, -0.1]);
        assert_eq!(solve(&m), vec![(0, 0), (1, 1)]);
    }
}

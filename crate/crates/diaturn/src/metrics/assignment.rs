//! Exact minimum-cost bipartite assignment.
//!
//! The solver is a Jonker-Volgenant style shortest augmenting path
//! search (O(n^2 m)); a refinement pass then rewrites the optimal
//! matching into the lexicographically smallest one by row-then-column
//! index, so equal-cost optima resolve deterministically.

use crate::error::{Error, Result};

/// Dense rectangular cost matrix of non-negative finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<CostMatrix> {
        if data.len() != rows * cols {
            return Err(Error::Metrics(format!(
                "cost matrix needs {} entries for {}x{}, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        if data.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::Metrics(
                "cost matrix entries must be finite and non-negative".into(),
            ));
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<CostMatrix> {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Metrics(
                "cost matrix rows must have equal length".into(),
            ));
        }
        CostMatrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }
}

/// An optimal matching: `row_to_col[i]` is the column assigned to row
/// `i` (`None` only when there are more rows than columns), and `total`
/// is the sum of the matched entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<Option<usize>>,
    pub total: f64,
}

/// Minimum-cost assignment of `min(rows, cols)` pairs. An empty matrix
/// yields an empty mapping with cost 0.
pub fn optimal_assignment(cost: &CostMatrix) -> Assignment {
    if cost.rows == 0 || cost.cols == 0 {
        return Assignment {
            row_to_col: vec![None; cost.rows],
            total: 0.0,
        };
    }
    let rows: Vec<usize> = (0..cost.rows).collect();
    let cols: Vec<usize> = (0..cost.cols).collect();
    let base = solve_sub(cost, &rows, &cols);
    let row_to_col = lexicographic_refine(cost, base);
    let total = row_to_col
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|j| cost.get(i, j)))
        .sum();
    Assignment { row_to_col, total }
}

/// Optimal cost over a subproblem given by row/column index subsets.
fn solve_sub(cost: &CostMatrix, rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() || cols.is_empty() {
        return 0.0;
    }
    // The augmenting-path core needs rows <= cols; flip if necessary.
    if rows.len() > cols.len() {
        let flipped: Vec<f64> = (0..cols.len())
            .flat_map(|j| rows.iter().map(move |&i| (i, j)))
            .map(|(i, j)| cost.get(i, cols[j]))
            .collect();
        return jv_total(&flipped, cols.len(), rows.len());
    }
    let data: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| cost.get(i, j)))
        .collect();
    jv_total(&data, rows.len(), cols.len())
}

/// Shortest augmenting path assignment on a dense row-major matrix with
/// `n <= m`; returns the optimal total as the sum of matched entries.
fn jv_total(cost: &[f64], n: usize, m: usize) -> f64 {
    let mut job: Vec<Option<usize>> = vec![None; m + 1];
    let mut ys = vec![0.0f64; n];
    let mut yt = vec![0.0f64; m + 1];

    for cur in 0..n {
        let mut w_cur = m;
        job[m] = Some(cur);
        let mut min_to = vec![f64::INFINITY; m + 1];
        let mut prv: Vec<Option<usize>> = vec![None; m + 1];
        let mut in_z = vec![false; m + 1];

        while let Some(j) = job[w_cur] {
            in_z[w_cur] = true;
            let mut delta = f64::INFINITY;
            let mut w_next = m;
            for w in 0..m {
                if in_z[w] {
                    continue;
                }
                let reduced = cost[j * m + w] - ys[j] - yt[w];
                if reduced < min_to[w] {
                    min_to[w] = reduced;
                    prv[w] = Some(w_cur);
                }
                if min_to[w] < delta {
                    delta = min_to[w];
                    w_next = w;
                }
            }
            for w in 0..=m {
                if in_z[w] {
                    if let Some(j) = job[w] {
                        ys[j] += delta;
                    }
                    yt[w] -= delta;
                } else {
                    min_to[w] -= delta;
                }
            }
            w_cur = w_next;
        }

        while w_cur != m {
            let w = prv[w_cur].expect("augmenting path is connected");
            job[w_cur] = job[w];
            w_cur = w;
        }
    }

    let mut total = vec![0.0; n];
    for w in 0..m {
        if let Some(j) = job[w] {
            total[j] = cost[j * m + w];
        }
    }
    total.iter().sum()
}

/// Rebuilds the optimal matching so each row, in order, takes the
/// smallest column index compatible with overall optimality.
fn lexicographic_refine(cost: &CostMatrix, optimal_total: f64) -> Vec<Option<usize>> {
    let eps = 1e-9 * (1.0 + optimal_total.abs());
    let mut remaining_cols: Vec<usize> = (0..cost.cols).collect();
    let mut result: Vec<Option<usize>> = vec![None; cost.rows];
    let mut target = optimal_total;

    for (row, slot_out) in result.iter_mut().enumerate() {
        let rest_rows: Vec<usize> = (row + 1..cost.rows).collect();
        let mut chosen_slot: Option<usize> = None;
        for slot in 0..remaining_cols.len() {
            let col = remaining_cols[slot];
            let cols_without: Vec<usize> = remaining_cols
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != slot)
                .map(|(_, &c)| c)
                .collect();
            let candidate = cost.get(row, col) + solve_sub(cost, &rest_rows, &cols_without);
            if candidate <= target + eps {
                chosen_slot = Some(slot);
                break;
            }
        }
        match chosen_slot {
            Some(slot) => {
                let col = remaining_cols.remove(slot);
                target -= cost.get(row, col);
                *slot_out = Some(col);
            }
            None => {
                // Row stays unmatched; only possible with rows > cols.
                debug_assert!(cost.rows > cost.cols);
            }
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assign(rows: Vec<Vec<f64>>) -> Assignment {
        optimal_assignment(&CostMatrix::from_rows(rows).unwrap())
    }

    #[test]
    fn two_by_two() {
        let a = assign(vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert_eq!(a.row_to_col, vec![Some(0), Some(1)]);
        assert_eq!(a.total, 2.0);
    }

    #[test]
    fn one_by_one() {
        let a = assign(vec![vec![7.0]]);
        assert_eq!(a.row_to_col, vec![Some(0)]);
        assert_eq!(a.total, 7.0);
    }

    #[test]
    fn empty_matrix() {
        let a = optimal_assignment(&CostMatrix::new(0, 0, vec![]).unwrap());
        assert!(a.row_to_col.is_empty());
        assert_eq!(a.total, 0.0);
    }

    #[test]
    fn ties_break_by_lowest_row_then_column() {
        let a = assign(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(a.row_to_col, vec![Some(0), Some(1)]);
    }

    #[test]
    fn rectangular_wide() {
        let a = assign(vec![vec![5.0, 1.0, 3.0], vec![4.0, 6.0, 1.0]]);
        assert_eq!(a.row_to_col, vec![Some(1), Some(2)]);
        assert_eq!(a.total, 2.0);
    }

    #[test]
    fn rectangular_tall_leaves_worst_row_out() {
        let a = assign(vec![vec![5.0], vec![1.0], vec![3.0]]);
        assert_eq!(a.row_to_col, vec![None, Some(0), None]);
        assert_eq!(a.total, 1.0);
    }

    #[test]
    fn rejects_negative_costs() {
        assert!(CostMatrix::from_rows(vec![vec![-1.0]]).is_err());
    }

    /// Brute force over all assignments, lexicographically first among
    /// minima.
    fn brute_force(cost: &CostMatrix) -> (Vec<Option<usize>>, f64) {
        fn rec(
            cost: &CostMatrix,
            row: usize,
            used: &mut Vec<bool>,
            cur: &mut Vec<Option<usize>>,
            cur_cost: f64,
            best: &mut Option<(Vec<Option<usize>>, f64)>,
        ) {
            if row == cost.rows() {
                let assigned = cur.iter().filter(|c| c.is_some()).count();
                if assigned < cost.rows().min(cost.cols()) {
                    return;
                }
                if best
                    .as_ref()
                    .map(|(_, b)| cur_cost < *b - 1e-12)
                    .unwrap_or(true)
                {
                    *best = Some((cur.clone(), cur_cost));
                }
                return;
            }
            for col in 0..cost.cols() {
                if !used[col] {
                    used[col] = true;
                    cur.push(Some(col));
                    rec(
                        cost,
                        row + 1,
                        used,
                        cur,
                        cur_cost + cost.get(row, col),
                        best,
                    );
                    cur.pop();
                    used[col] = false;
                }
            }
            if cost.rows() > cost.cols() {
                cur.push(None);
                rec(cost, row + 1, used, cur, cur_cost, best);
                cur.pop();
            }
        }
        let mut best = None;
        rec(
            cost,
            0,
            &mut vec![false; cost.cols()],
            &mut Vec::new(),
            0.0,
            &mut best,
        );
        best.expect("non-empty matrix")
    }

    #[test]
    fn matches_brute_force_on_random_matrices() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for case in 0..60 {
            let rows = rng.gen_range(1..=4);
            let cols = rng.gen_range(1..=4);
            let data: Vec<f64> = (0..rows * cols)
                .map(|_| (rng.gen_range(0..40) as f64) / 4.0)
                .collect();
            let cost = CostMatrix::new(rows, cols, data).unwrap();
            let got = optimal_assignment(&cost);
            let (want_map, want_cost) = brute_force(&cost);
            assert!(
                (got.total - want_cost).abs() < 1e-9,
                "case {}: {} vs {}",
                case,
                got.total,
                want_cost
            );
            assert_eq!(got.row_to_col, want_map, "case {}", case);
        }
    }
}

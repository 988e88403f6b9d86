//! Minimum-cost assignment with column capacities, solved by successive
//! shortest augmenting paths with node potentials.
//!
//! Rows are items that each need exactly one assignment; columns have a
//! capacity (1 for the classic assignment problem, `k - 1` when matching
//! units to block templates). Costs must be finite and non-negative, which
//! keeps every reduced cost non-negative so Dijkstra search is valid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular matrix of pairwise assignment costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        assert_eq!(data.len(), rows * cols, "cost data length mismatch");
        for (idx, &v) in data.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidCost {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
        }
        Ok(CostMatrix { data, rows, cols })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "irregular cost matrix");
            data.extend(row);
        }
        CostMatrix::new(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// A minimum-cost assignment of every row to a column.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<usize>,
    pub total_cost: f64,
}

/// Classic assignment: each column can take at most one row. Requires
/// `rows <= cols`.
pub fn optimal_assignment(cost: &CostMatrix) -> Result<Assignment> {
    optimal_assignment_capacitated(cost, &vec![1; cost.cols()])
}

/// Assignment where column `j` can take up to `capacities[j]` rows.
pub fn optimal_assignment_capacitated(
    cost: &CostMatrix,
    capacities: &[usize],
) -> Result<Assignment> {
    assert_eq!(capacities.len(), cost.cols(), "capacity length mismatch");
    let n_rows = cost.rows();
    let n_cols = cost.cols();
    let total_cap: usize = capacities.iter().sum();
    if n_rows > total_cap || n_cols == 0 {
        return Err(Error::InfeasibleInstance {
            rows: n_rows,
            capacity: total_cap,
        });
    }

    let mut col_of: Vec<usize> = vec![usize::MAX; n_rows];
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); n_cols];
    let mut u = vec![0.0; n_rows]; // row potentials
    let mut v = vec![0.0; n_cols]; // column potentials

    let mut dist = vec![0.0_f64; n_cols];
    let mut prev_col: Vec<usize> = vec![usize::MAX; n_cols];
    let mut via_row: Vec<usize> = vec![usize::MAX; n_cols];
    let mut settled = vec![false; n_cols];

    for r in 0..n_rows {
        for j in 0..n_cols {
            dist[j] = cost.get(r, j) - v[j];
            prev_col[j] = usize::MAX;
            via_row[j] = r;
            settled[j] = false;
        }
        let mut target = usize::MAX;
        loop {
            // select the closest unsettled column
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for j in 0..n_cols {
                if !settled[j] && dist[j] < best_d {
                    best_d = dist[j];
                    best = j;
                }
            }
            if best == usize::MAX {
                return Err(Error::InfeasibleInstance {
                    rows: n_rows,
                    capacity: total_cap,
                });
            }
            settled[best] = true;
            if rows_of[best].len() < capacities[best] {
                target = best;
                break;
            }
            // relax through every row currently assigned to `best`
            for &r2 in &rows_of[best] {
                let base = dist[best] - u[r2];
                for j2 in 0..n_cols {
                    if settled[j2] {
                        continue;
                    }
                    let nd = base + cost.get(r2, j2) - v[j2];
                    if nd < dist[j2] {
                        dist[j2] = nd;
                        prev_col[j2] = best;
                        via_row[j2] = r2;
                    }
                }
            }
        }

        // dual update keeps reduced costs non-negative
        let final_d = dist[target];
        for j in 0..n_cols {
            if settled[j] {
                v[j] += dist[j] - final_d;
            }
        }
        // reassign along the augmenting path, end to start
        let mut j = target;
        while prev_col[j] != usize::MAX {
            let mover = via_row[j];
            let from = prev_col[j];
            let pos = rows_of[from]
                .iter()
                .position(|&x| x == mover)
                .expect("path row must sit on its source column");
            rows_of[from].swap_remove(pos);
            rows_of[j].push(mover);
            col_of[mover] = j;
            j = from;
        }
        rows_of[j].push(r);
        col_of[r] = j;
        // matched edges on settled columns must stay tight after the v shift
        for j in 0..n_cols {
            if settled[j] {
                for &r2 in &rows_of[j] {
                    u[r2] = cost.get(r2, j) - v[j];
                }
            }
        }
    }

    let total_cost = (0..n_rows).map(|r| cost.get(r, col_of[r])).sum();
    Ok(Assignment {
        row_to_col: col_of,
        total_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_force_unit(cost: &CostMatrix) -> f64 {
        // try every injective row -> column mapping
        fn rec(cost: &CostMatrix, r: usize, used: &mut [bool], acc: f64, best: &mut f64) {
            if r == cost.rows() {
                *best = best.min(acc);
                return;
            }
            for j in 0..cost.cols() {
                if !used[j] {
                    used[j] = true;
                    rec(cost, r + 1, used, acc + cost.get(r, j), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, 0, &mut vec![false; cost.cols()], 0.0, &mut best);
        best
    }

    fn brute_force_cap(cost: &CostMatrix, caps: &[usize]) -> f64 {
        fn rec(
            cost: &CostMatrix,
            caps: &[usize],
            r: usize,
            used: &mut Vec<usize>,
            acc: f64,
            best: &mut f64,
        ) {
            if r == cost.rows() {
                *best = best.min(acc);
                return;
            }
            for j in 0..cost.cols() {
                if used[j] < caps[j] {
                    used[j] += 1;
                    rec(cost, caps, r + 1, used, acc + cost.get(r, j), best);
                    used[j] -= 1;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, caps, 0, &mut vec![0; cost.cols()], 0.0, &mut best);
        best
    }

    #[test]
    fn two_by_two_dominant_diagonal() {
        let cost = CostMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let a = optimal_assignment(&cost).unwrap();
        assert_eq!(a.row_to_col, vec![0, 1]);
        assert!((a.total_cost - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_rows_any_matching_is_optimal() {
        let cost =
            CostMatrix::from_rows(vec![vec![3.0, 3.0, 3.0]; 3]).unwrap();
        let a = optimal_assignment(&cost).unwrap();
        assert!((a.total_cost - 9.0).abs() < 1e-12);
        let mut cols = a.row_to_col.clone();
        cols.sort_unstable();
        assert_eq!(cols, vec![0, 1, 2]);
    }

    #[test]
    fn matches_brute_force_on_random_square_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.gen_range(1..=6);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(0.0..10.0)).collect())
                .collect();
            let cost = CostMatrix::from_rows(rows).unwrap();
            let got = optimal_assignment(&cost).unwrap();
            let want = brute_force_unit(&cost);
            assert!(
                (got.total_cost - want).abs() < 1e-9,
                "solver {} vs brute force {want}",
                got.total_cost
            );
        }
    }

    #[test]
    fn matches_brute_force_on_rectangular_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let r = rng.gen_range(1..=5);
            let c = rng.gen_range(r..=7);
            let rows: Vec<Vec<f64>> = (0..r)
                .map(|_| (0..c).map(|_| rng.gen_range(0.0..5.0)).collect())
                .collect();
            let cost = CostMatrix::from_rows(rows).unwrap();
            let got = optimal_assignment(&cost).unwrap();
            assert!((got.total_cost - brute_force_unit(&cost)).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_brute_force_with_capacities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let c = rng.gen_range(1..=3);
            let caps: Vec<usize> = (0..c).map(|_| rng.gen_range(1..=3)).collect();
            let max_rows: usize = caps.iter().sum();
            let r = rng.gen_range(1..=max_rows);
            let rows: Vec<Vec<f64>> = (0..r)
                .map(|_| (0..c).map(|_| rng.gen_range(0.0..5.0)).collect())
                .collect();
            let cost = CostMatrix::from_rows(rows).unwrap();
            let got = optimal_assignment_capacitated(&cost, &caps).unwrap();
            let want = brute_force_cap(&cost, &caps);
            assert!(
                (got.total_cost - want).abs() < 1e-9,
                "solver {} vs brute force {want} (caps {caps:?})",
                got.total_cost
            );
            // capacities respected
            let mut used = vec![0usize; c];
            for &j in &got.row_to_col {
                used[j] += 1;
            }
            assert!(used.iter().zip(&caps).all(|(u, cap)| u <= cap));
        }
    }

    #[test]
    fn capacitated_equals_duplicated_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let c = rng.gen_range(1..=3);
            let caps: Vec<usize> = (0..c).map(|_| rng.gen_range(1..=3)).collect();
            let r: usize = caps.iter().sum();
            let base: Vec<Vec<f64>> = (0..r)
                .map(|_| (0..c).map(|_| rng.gen_range(0.0..9.0)).collect())
                .collect();
            let dup_rows: Vec<Vec<f64>> = base
                .iter()
                .map(|row| {
                    let mut expanded = Vec::new();
                    for (j, &v) in row.iter().enumerate() {
                        expanded.extend(std::iter::repeat(v).take(caps[j]));
                    }
                    expanded
                })
                .collect();
            let cap_cost = CostMatrix::from_rows(base).unwrap();
            let dup_cost = CostMatrix::from_rows(dup_rows).unwrap();
            let a = optimal_assignment_capacitated(&cap_cost, &caps).unwrap();
            let b = optimal_assignment(&dup_cost).unwrap();
            assert!((a.total_cost - b.total_cost).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_when_rows_exceed_capacity() {
        let cost = CostMatrix::from_rows(vec![vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(
            optimal_assignment(&cost),
            Err(Error::InfeasibleInstance { rows: 2, capacity: 1 })
        ));
    }

    #[test]
    fn rejects_invalid_costs() {
        assert!(CostMatrix::from_rows(vec![vec![1.0, f64::NAN]]).is_err());
        assert!(CostMatrix::from_rows(vec![vec![-1.0]]).is_err());
        assert!(CostMatrix::from_rows(vec![vec![f64::INFINITY]]).is_err());
    }
}

use alloc::vec;
use alloc::vec::Vec;

use super::{Assignment, AssignmentError, CostMatrix};

/// Minimum-cost assignment of every row to a distinct column (rows <= cols)
/// with the shortest-augmenting-path Hungarian method, O(n^2 m).
pub fn hungarian_assign(c: &CostMatrix) -> Result<Assignment, AssignmentError> {
    let n = c.rows();
    let m = c.cols();
    if n > m {
        return Err(AssignmentError::TooManyRows { rows: n, cols: m });
    }
    if n == 0 {
        return Ok(Assignment::new(Vec::new(), c.existing_cols()));
    }

    // Potentials and matching are 1-indexed; index 0 is the virtual column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut row_of_col = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let row = c.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
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
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    for j in 1..=m {
        if row_of_col[j] != 0 {
            col_of_row[row_of_col[j] - 1] = j - 1;
        }
    }
    Assignment::new(col_of_row, c.existing_cols()).check_admissible(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::FORBIDDEN;

    #[test]
    fn zero_diagonal() {
        let c = CostMatrix::from_rows(&[[0.0, 9.0], [9.0, 0.0]]).unwrap();
        let a = hungarian_assign(&c).unwrap();
        assert_eq!(a.cols(), &[0, 1]);
        assert_eq!(a.total_cost(&c), 0.0);
    }

    #[test]
    fn crossed_optimum() {
        let c = CostMatrix::from_rows(&[[4.0, 1.0], [2.0, 3.0]]).unwrap();
        let a = hungarian_assign(&c).unwrap();
        assert_eq!(a.cols(), &[1, 0]);
        assert_eq!(a.total_cost(&c), 3.0);
    }

    #[test]
    fn rectangular_picks_cheapest_columns() {
        let c = CostMatrix::from_rows(&[[5.0, 1.0, 3.0], [5.0, 2.0, 9.0]]).unwrap();
        let a = hungarian_assign(&c).unwrap();
        assert_eq!(a.total_cost(&c), 5.0);
    }

    #[test]
    fn forbidden_row_is_error() {
        let c = CostMatrix::from_rows(&[[FORBIDDEN, FORBIDDEN], [1.0, 2.0]]).unwrap();
        assert_eq!(hungarian_assign(&c), Err(AssignmentError::Infeasible { row: 0 }));
    }

    #[test]
    fn contention_on_single_admissible_column() {
        let c = CostMatrix::from_rows(&[[1.0, FORBIDDEN], [1.0, FORBIDDEN]]).unwrap();
        assert!(matches!(hungarian_assign(&c), Err(AssignmentError::Infeasible { .. })));
    }

    #[test]
    fn too_many_rows() {
        let c = CostMatrix::filled(3, 2, 1.0);
        assert!(matches!(hungarian_assign(&c), Err(AssignmentError::TooManyRows { .. })));
    }

    #[test]
    fn empty() {
        let c = CostMatrix::filled(0, 3, 1.0);
        assert!(hungarian_assign(&c).unwrap().is_empty());
    }
}

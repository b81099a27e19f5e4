use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{Assignment, AssignmentError, CostMatrix};

/// Bid budget used by [`auction_assign`].
pub const DEFAULT_BID_CAP: u64 = 20_000_000;

/// Forward auction with epsilon scaling.
///
/// Costs are negated into benefits. Rectangular problems (rows < cols) are
/// squared with zero-benefit dummy rows so prices can be carried across
/// scaling phases. Scaling starts at a quarter of the largest admissible
/// entry and divides by five until `epsilon` is reached; the last phase runs
/// at exactly `epsilon`, so the result satisfies epsilon-complementary
/// slackness for that value.
pub fn auction_assign(c: &CostMatrix, epsilon: f64) -> Result<Assignment, AssignmentError> {
    auction_assign_with_cap(c, epsilon, DEFAULT_BID_CAP)
}

pub fn auction_assign_with_cap(c: &CostMatrix, epsilon: f64, bid_cap: u64) -> Result<Assignment, AssignmentError> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(AssignmentError::NonPositiveEpsilon(epsilon));
    }
    let n = c.rows();
    let m = c.cols();
    if n > m {
        return Err(AssignmentError::TooManyRows { rows: n, cols: m });
    }
    if n == 0 {
        return Ok(Assignment::new(Vec::new(), c.existing_cols()));
    }

    let benefit = |i: usize, j: usize| if i < n { -c.get(i, j) } else { 0.0 };

    let mut prices = vec![0.0f64; m];
    let mut owner: Vec<Option<usize>> = vec![None; m];
    let mut assigned: Vec<Option<usize>> = vec![None; m];
    let mut queue: VecDeque<usize> = VecDeque::with_capacity(m);
    let mut bids: u64 = 0;

    let mut eps = (c.max_abs_admissible() / 4.0).max(epsilon);
    loop {
        owner.fill(None);
        assigned.fill(None);
        queue.clear();
        queue.extend(0..m);

        while let Some(i) = queue.pop_front() {
            let mut best_j = 0usize;
            let mut best = f64::NEG_INFINITY;
            let mut second = f64::NEG_INFINITY;
            for (j, &price) in prices.iter().enumerate() {
                let value = benefit(i, j) - price;
                if value > best {
                    second = best;
                    best = value;
                    best_j = j;
                } else if value > second {
                    second = value;
                }
            }
            let increment = if second.is_finite() { best - second + eps } else { eps };
            prices[best_j] += increment;
            if let Some(prev) = owner[best_j].replace(i) {
                assigned[prev] = None;
                queue.push_back(prev);
            }
            assigned[i] = Some(best_j);

            bids += 1;
            if bids > bid_cap {
                return Err(AssignmentError::BidCapExceeded { bids });
            }
        }

        if eps <= epsilon {
            break;
        }
        eps = (eps / 5.0).max(epsilon);
    }

    let col_of_row = assigned[..n]
        .iter()
        .map(|a| a.expect("every person holds an object after the auction"))
        .collect();
    Assignment::new(col_of_row, c.existing_cols()).check_admissible(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{hungarian_assign, FORBIDDEN};

    #[test]
    fn zero_diagonal() {
        let c = CostMatrix::from_rows(&[[0.0, 9.0], [9.0, 0.0]]).unwrap();
        assert_eq!(auction_assign(&c, 0.01).unwrap().cols(), &[0, 1]);
    }

    #[test]
    fn crossed_optimum() {
        let c = CostMatrix::from_rows(&[[4.0, 1.0], [2.0, 3.0]]).unwrap();
        assert_eq!(auction_assign(&c, 0.01).unwrap().cols(), &[1, 0]);
    }

    #[test]
    fn epsilon_must_be_positive() {
        let c = CostMatrix::filled(1, 1, 0.0);
        assert_eq!(auction_assign(&c, 0.0), Err(AssignmentError::NonPositiveEpsilon(0.0)));
        assert!(auction_assign(&c, -1.0).is_err());
        assert!(auction_assign(&c, f64::NAN).is_err());
    }

    #[test]
    fn single_column() {
        let c = CostMatrix::from_rows(&[[3.5]]).unwrap();
        assert_eq!(auction_assign(&c, 0.1).unwrap().cols(), &[0]);
    }

    #[test]
    fn rectangular_matches_hungarian() {
        let c = CostMatrix::from_rows(&[[5.0, 1.0, 3.0, 8.0], [5.0, 2.0, 9.0, 0.5]]).unwrap();
        let a = auction_assign(&c, 0.01).unwrap();
        let h = hungarian_assign(&c).unwrap();
        assert_eq!(a.total_cost(&c), h.total_cost(&c));
    }

    #[test]
    fn forbidden_contention_is_error() {
        let c = CostMatrix::from_rows(&[[1.0, FORBIDDEN], [1.0, FORBIDDEN]]).unwrap();
        assert!(matches!(
            auction_assign(&c, 0.01),
            Err(AssignmentError::Infeasible { .. })
        ));
    }

    #[test]
    fn tiny_cap_reports_non_convergence() {
        let c = CostMatrix::from_rows(&[[1.0, 2.0], [1.0, 2.0]]).unwrap();
        assert!(matches!(
            auction_assign_with_cap(&c, 1e-6, 3),
            Err(AssignmentError::BidCapExceeded { .. })
        ));
    }
}

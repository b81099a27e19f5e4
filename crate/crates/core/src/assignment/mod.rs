//! Linear assignment: cost matrices, Hungarian and auction solvers, and the
//! chi-squared gate used to decide between matching and track birth.
//!
//! Costs are minimized. Forbidden pairs carry the finite sentinel
//! [`FORBIDDEN`]; a solution that lands on one is reported as an error
//! instead of being returned.

mod auction;
mod chi2;
mod hungarian;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use auction::{auction_assign, auction_assign_with_cap, DEFAULT_BID_CAP};
pub use chi2::{chi2_cdf, chi2_ppf, ln_gamma, regularized_gamma_p};
pub use hungarian::hungarian_assign;

/// Cost of a forbidden pair.
pub const FORBIDDEN: f64 = 1e9;

#[derive(Clone, Debug, PartialEq)]
pub enum AssignmentError {
    /// Matrix data does not match the declared shape.
    Shape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    /// More rows than columns.
    TooManyRows {
        rows: usize,
        cols: usize,
    },
    NanCost {
        row: usize,
        col: usize,
    },
    /// The optimal solution had to use a forbidden pair for this row.
    Infeasible {
        row: usize,
    },
    NonPositiveEpsilon(f64),
    NonPositiveGate(f64),
    /// The auction exceeded its bid budget.
    BidCapExceeded {
        bids: u64,
    },
    ProbabilityOutOfRange(f64),
    ZeroDegreesOfFreedom,
}

impl fmt::Display for AssignmentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssignmentError::Shape { rows, cols, len } => {
                write!(f, "cost data of length {len} does not fit a {rows}x{cols} matrix")
            }
            AssignmentError::TooManyRows { rows, cols } => {
                write!(f, "{rows} rows cannot be assigned to {cols} columns")
            }
            AssignmentError::NanCost { row, col } => write!(f, "NaN cost at ({row}, {col})"),
            AssignmentError::Infeasible { row } => {
                write!(f, "row {row} has no admissible column")
            }
            AssignmentError::NonPositiveEpsilon(e) => write!(f, "epsilon must be positive, got {e}"),
            AssignmentError::NonPositiveGate(g) => write!(f, "gate must be positive, got {g}"),
            AssignmentError::BidCapExceeded { bids } => {
                write!(f, "auction did not converge within {bids} bids")
            }
            AssignmentError::ProbabilityOutOfRange(p) => {
                write!(f, "probability {p} outside (0, 1)")
            }
            AssignmentError::ZeroDegreesOfFreedom => f.write_str("degrees of freedom must be >= 1"),
        }
    }
}

impl core::error::Error for AssignmentError {}

/// Dense row-major cost matrix. Rows are detections, columns candidates.
///
/// `existing_cols` marks how many leading columns are existing objects; the
/// rest (if any) are birth columns appended by [`augment_for_birth`].
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    existing_cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    /// Builds a matrix; `+inf` and anything above [`FORBIDDEN`] become the
    /// sentinel. NaN is rejected.
    pub fn new(rows: usize, cols: usize, mut data: Vec<f64>) -> Result<Self, AssignmentError> {
        if data.len() != rows * cols {
            return Err(AssignmentError::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        for (i, v) in data.iter_mut().enumerate() {
            if v.is_nan() {
                return Err(AssignmentError::NanCost {
                    row: i / cols,
                    col: i % cols,
                });
            }
            *v = v.clamp(-FORBIDDEN, FORBIDDEN);
        }
        Ok(Self {
            rows,
            cols,
            existing_cols: cols,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, AssignmentError> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m);
        for r in rows {
            let r = r.as_ref();
            if r.len() != m {
                return Err(AssignmentError::Shape {
                    rows: n,
                    cols: m,
                    len: data.len() + r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(n, m, data)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            existing_cols: cols,
            data: vec![value.min(FORBIDDEN); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of leading columns that refer to existing objects.
    pub fn existing_cols(&self) -> usize {
        self.existing_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = if value.is_nan() {
            FORBIDDEN
        } else {
            value.min(FORBIDDEN)
        };
    }

    pub fn is_forbidden(&self, row: usize, col: usize) -> bool {
        self.get(row, col) >= FORBIDDEN
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Largest absolute admissible entry, 0 if there is none.
    pub(crate) fn max_abs_admissible(&self) -> f64 {
        self.data
            .iter()
            .filter(|v| v.abs() < FORBIDDEN)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// What a detection was assigned to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Existing(usize),
    Birth,
}

/// Row-to-column assignment covering every row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    col_of_row: Vec<usize>,
    existing_cols: usize,
}

impl Assignment {
    pub(crate) fn new(col_of_row: Vec<usize>, existing_cols: usize) -> Self {
        Self {
            col_of_row,
            existing_cols,
        }
    }

    pub fn len(&self) -> usize {
        self.col_of_row.len()
    }

    pub fn is_empty(&self) -> bool {
        self.col_of_row.is_empty()
    }

    pub fn col(&self, row: usize) -> usize {
        self.col_of_row[row]
    }

    pub fn cols(&self) -> &[usize] {
        &self.col_of_row
    }

    /// Columns at or beyond the existing block mean "create a new object".
    pub fn target(&self, row: usize) -> Target {
        let c = self.col_of_row[row];
        if c < self.existing_cols {
            Target::Existing(c)
        } else {
            Target::Birth
        }
    }

    pub fn total_cost(&self, c: &CostMatrix) -> f64 {
        self.col_of_row.iter().enumerate().map(|(r, &col)| c.get(r, col)).sum()
    }

    /// Rejects solutions that use a forbidden pair.
    pub(crate) fn check_admissible(self, c: &CostMatrix) -> Result<Self, AssignmentError> {
        for (row, &col) in self.col_of_row.iter().enumerate() {
            if c.is_forbidden(row, col) {
                return Err(AssignmentError::Infeasible { row });
            }
        }
        Ok(self)
    }
}

/// Appends one birth column per row: `gate` on the diagonal, forbidden
/// elsewhere. The result is `K x (N + K)`.
pub fn augment_for_birth(c: &CostMatrix, gate: f64) -> Result<CostMatrix, AssignmentError> {
    if !(gate > 0.0) {
        return Err(AssignmentError::NonPositiveGate(gate));
    }
    let k = c.rows;
    let n = c.existing_cols.min(c.cols);
    let cols = n + k;
    let mut data = Vec::with_capacity(k * cols);
    for r in 0..k {
        data.extend_from_slice(&c.row(r)[..n]);
        for b in 0..k {
            data.push(if b == r { gate.min(FORBIDDEN) } else { FORBIDDEN });
        }
    }
    Ok(CostMatrix {
        rows: k,
        cols,
        existing_cols: n,
        data,
    })
}

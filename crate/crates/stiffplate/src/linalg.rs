//! Dense solves for the interface systems, on top of nalgebra's partially
//! pivoted LU.

use nalgebra::{DMatrix, DVector, LU};
use thiserror::Error;

pub type DenseMatrix = DMatrix<f64>;

/// Condition numbers above this are reported by the solvers.
pub const CONDITION_WARNING: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular to working precision at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("dimension mismatch: matrix is {rows}x{cols}, right-hand side has {rhs} rows")]
    Dimension { rows: usize, cols: usize, rhs: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

/// A factorisation that can be reused for several right-hand sides.
#[derive(Debug, Clone)]
pub struct Factorization {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl Factorization {
    pub fn new(a: &DenseMatrix) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LinalgError::NotSquare { rows: n, cols: a.ncols() });
        }
        let scale = a.amax();
        let lu = a.clone().lu();
        let tiny = n.max(1) as f64 * f64::EPSILON * scale;
        let u = lu.u();
        for k in 0..n {
            if !(u[(k, k)].abs() > tiny) {
                return Err(LinalgError::Singular { pivot: k });
            }
        }
        Ok(Factorization { lu, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
        if rhs.len() != self.n {
            return Err(LinalgError::Dimension { rows: self.n, cols: self.n, rhs: rhs.len() });
        }
        let mut x = rhs.clone();
        self.lu.solve_mut(&mut x);
        Ok(x)
    }

    pub fn solve_matrix(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if rhs.nrows() != self.n {
            return Err(LinalgError::Dimension { rows: self.n, cols: self.n, rhs: rhs.nrows() });
        }
        let mut x = rhs.clone();
        self.lu.solve_mut(&mut x);
        Ok(x)
    }

    pub fn inverse(&self) -> DenseMatrix {
        self.solve_matrix(&DenseMatrix::identity(self.n, self.n)).expect("square")
    }
}

pub fn lu_solve(a: &DenseMatrix, rhs: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
    Factorization::new(a)?.solve(rhs)
}

pub fn lu_solve_matrix(a: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    Factorization::new(a)?.solve_matrix(rhs)
}

/// `||A||_1 ||A^-1||_1`, or infinity for a singular matrix.
pub fn condition_estimate(a: &DenseMatrix) -> f64 {
    match Factorization::new(a) {
        Ok(f) => one_norm(a) * one_norm(&f.inverse()),
        Err(_) => f64::INFINITY,
    }
}

pub fn one_norm(a: &DenseMatrix) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `1 + A` for a square `A`.
pub fn identity_plus(a: &DenseMatrix) -> DenseMatrix {
    let mut m = a.clone();
    for i in 0..m.nrows().min(m.ncols()) {
        m[(i, i)] += 1.0;
    }
    m
}

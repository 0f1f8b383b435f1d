//! Small dense matrices and the direct solvers used by the thermal model
//! and the baseline detector. Systems here are tiny (one row or column per
//! floorplan block), so a plain row-major `Vec<f64>` is all we need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of f64.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        let mut data = Vec::with_capacity(n * m);
        for r in &rows {
            data.extend_from_slice(r);
        }
        Matrix {
            rows: n,
            cols: m,
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if self.get(i, j).to_bits() != self.get(j, i).to_bits() {
                    return false;
                }
            }
        }
        true
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
///
/// Factoring once and back-substituting per sample keeps trace generation
/// at O(B^2) per row instead of O(B^3).
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn factor(a: &Matrix) -> Result<Cholesky> {
        let n = a.rows();
        if n != a.cols() {
            return Err(Error::InvalidParam(format!(
                "cannot factor a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    // relative pivot floor catches numerically singular
                    // systems that rounding leaves barely positive
                    let floor = 1e-12 * a.get(i, i).abs();
                    if !(s > floor) || !s.is_finite() {
                        return Err(Error::SingularSystem);
                    }
                    l.set(i, j, s.sqrt());
                } else {
                    l.set(i, j, s / l.get(j, j));
                }
            }
        }
        Ok(Cholesky { l })
    }

    /// Solve A x = b for the factored A.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        // forward: L y = b
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l.get(i, k) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        // backward: L^T x = y
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l.get(k, i) * x[k];
            }
            x[i] = s / self.l.get(i, i);
        }
        x
    }
}

/// Ordinary least squares via normal equations and a Cholesky solve.
///
/// Returns the coefficient vector for `design * beta ~ target`. A failed
/// factorization signals a rank-deficient design.
pub fn least_squares(design: &Matrix, target: &[f64]) -> Result<Vec<f64>> {
    let n = design.rows();
    let p = design.cols();
    assert_eq!(target.len(), n);
    let mut gram = Matrix::zeros(p, p);
    let mut rhs = vec![0.0; p];
    for r in 0..n {
        let row = design.row(r);
        for i in 0..p {
            rhs[i] += row[i] * target[r];
            for j in 0..=i {
                let v = gram.get(i, j) + row[i] * row[j];
                gram.set(i, j, v);
            }
        }
    }
    for i in 0..p {
        for j in (i + 1)..p {
            let v = gram.get(j, i);
            gram.set(i, j, v);
        }
    }
    let chol = Cholesky::factor(&gram)?;
    Ok(chol.solve(&rhs))
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

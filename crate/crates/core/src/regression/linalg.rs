//! Dense row-major matrix and Householder QR least squares.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

/// Relative threshold on the R diagonal below which a column is declared
/// linearly dependent.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
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

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n * p);
        for r in rows {
            assert_eq!(r.len(), p, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: n, cols: p, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// X beta for a coefficient vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Output of the QR least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Diagonal of (X^T X)^{-1}, for coefficient standard errors.
    pub normal_inverse_diagonal: Vec<f64>,
}

/// Solve min ||y - X beta|| by Householder QR.
///
/// `names` label the columns for the rank-deficiency error.
pub fn qr_least_squares(x: &Matrix, y: &[f64], names: &[String]) -> Result<LeastSquares> {
    let n = x.rows();
    let p = x.cols();
    assert_eq!(y.len(), n);
    assert!(n >= p && p > 0);

    let mut a = x.clone();
    let mut rhs = y.to_vec();

    for k in 0..p {
        // Householder vector for column k, rows k..n.
        let mut norm = 0.0;
        for i in k..n {
            norm += a.get(i, k) * a.get(i, k);
        }
        norm = norm.sqrt();
        if norm == 0.0 {
            continue; // zero column; caught by the rank check below
        }
        let alpha = if a.get(k, k) > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n - k];
        v[0] = a.get(k, k) - alpha;
        for i in k + 1..n {
            v[i - k] = a.get(i, k);
        }
        let vtv: f64 = v.iter().map(|t| t * t).sum();
        if vtv == 0.0 {
            continue;
        }
        // Apply I - 2 v v^T / (v^T v) to the trailing columns and the rhs.
        for j in k..p {
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i - k] * a.get(i, j);
            }
            let c = 2.0 * dot / vtv;
            for i in k..n {
                a.set(i, j, a.get(i, j) - c * v[i - k]);
            }
        }
        let mut dot = 0.0;
        for i in k..n {
            dot += v[i - k] * rhs[i];
        }
        let c = 2.0 * dot / vtv;
        for i in k..n {
            rhs[i] -= c * v[i - k];
        }
        a.set(k, k, alpha);
    }

    // Rank check on the R diagonal.
    let scale = (0..p).fold(0.0_f64, |m, j| m.max(a.get(j, j).abs()));
    for j in 0..p {
        if a.get(j, j).abs() <= RANK_TOL * scale || scale == 0.0 {
            let column = names.get(j).cloned().unwrap_or_else(|| format!("column {j}"));
            return Err(Error::RankDeficient { column });
        }
    }

    // Back-substitute R beta = (Q^T y)[0..p].
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let mut acc = rhs[i];
        for j in i + 1..p {
            acc -= a.get(i, j) * beta[j];
        }
        beta[i] = acc / a.get(i, i);
    }

    // (X^T X)^{-1} = R^{-1} R^{-T}; its diagonal is the squared row norms
    // of R^{-1}.
    let mut rinv = Matrix::zeros(p, p);
    for i in 0..p {
        rinv.set(i, i, 1.0 / a.get(i, i));
        for j in i + 1..p {
            let mut acc = 0.0;
            for k in i..j {
                acc += rinv.get(i, k) * a.get(k, j);
            }
            rinv.set(i, j, -acc / a.get(j, j));
        }
    }
    let diag = (0..p)
        .map(|i| (i..p).map(|j| rinv.get(i, j) * rinv.get(i, j)).sum())
        .collect();

    Ok(LeastSquares {
        coefficients: beta,
        normal_inverse_diagonal: diag,
    })
}

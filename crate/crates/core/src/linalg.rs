//! Dense row-major matrices with the handful of factorizations the learners need:
//! partial-pivot LU for square solves and Householder QR for least squares.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative pivot threshold below which a factorization is declared singular.
pub const PIVOT_TOL: f64 = 1e-12;
/// Ridge added to the normal equations when the design matrix is rank deficient.
pub const RIDGE: f64 = 1e-10;

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

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn column(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_vec(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let arow = self.row(k);
            let brow = other.row(k);
            for (i, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim("shape mismatch in subtraction"));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P·A = L·U` packed into one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::dim(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > PIVOT_TOL * scale) {
                return Err(Error::Singular { column: k, pivot });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = 1.0 / lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] * inv;
                lu[(i, k)] = f;
                if f == 0.0 {
                    continue;
                }
                let (upper, lower) = lu.data.split_at_mut(i * n);
                let krow = &upper[k * n + k + 1..k * n + n];
                let irow = &mut lower[k + 1..n];
                for (x, y) in irow.iter_mut().zip(krow) {
                    *x -= f * y;
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.lu.rows;
        if b.rows != n {
            return Err(Error::dim(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows
            )));
        }
        let m = b.cols;
        let mut x = Matrix::zeros(n, m);
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).copy_from_slice(b.row(p));
        }
        for c in 0..m {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        Ok(x)
    }
}

/// Solves `A·x = b` for square `A` by partial-pivot LU.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Lu::factor(a)?.solve(b)
}

/// Cholesky factor `L` with `A = L·Lᵀ`; fails if `A` is not numerically positive definite.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    if a.rows != a.cols {
        return Err(Error::dim("Cholesky needs a square matrix"));
    }
    let n = a.rows;
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > PIVOT_TOL * scale) {
            return Err(Error::Singular { column: j, pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L·Lᵀ·X = B` given the Cholesky factor.
pub fn cholesky_solve(l: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = l.rows;
    if b.rows != n {
        return Err(Error::dim("right-hand side does not match factor"));
    }
    let mut x = b.clone();
    for c in 0..b.cols {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub weights: Matrix,
    /// Set when the design matrix was rank deficient and the ridge fallback was used.
    pub regularized: bool,
}

/// Minimizes `‖Phi·W − T‖²` column by column.
///
/// Uses Householder QR. If `Phi` is numerically rank deficient the normal
/// equations are solved instead with a `RIDGE` shift and the result is flagged.
pub fn least_squares(phi: &Matrix, t: &Matrix) -> Result<LeastSquares> {
    let (n, p) = (phi.rows, phi.cols);
    if n < p {
        return Err(Error::dim(format!(
            "least squares needs rows >= cols, got {n}x{p}"
        )));
    }
    if t.rows != n {
        return Err(Error::dim(format!(
            "targets have {} rows, design matrix has {n}",
            t.rows
        )));
    }
    match qr_solve(phi, t) {
        Some(w) => Ok(LeastSquares {
            weights: w,
            regularized: false,
        }),
        None => {
            log::warn!("rank-deficient design matrix ({n}x{p}); using ridge {RIDGE:e}");
            ridge_least_squares(phi, t)
        }
    }
}

/// Normal equations with a `RIDGE` shift relative to the Gram matrix's largest
/// entry. Also accepts underdetermined systems.
pub fn ridge_least_squares(phi: &Matrix, t: &Matrix) -> Result<LeastSquares> {
    if t.rows != phi.rows {
        return Err(Error::dim("targets do not match design matrix rows"));
    }
    let p = phi.cols;
    let mut gram = phi.t_matmul(phi)?;
    let shift = RIDGE * gram.max_abs().max(1.0);
    for i in 0..p {
        gram[(i, i)] += shift;
    }
    let rhs = phi.t_matmul(t)?;
    let weights = match cholesky(&gram) {
        Ok(l) => cholesky_solve(&l, &rhs)?,
        Err(_) => solve_linear(&gram, &rhs)?,
    };
    Ok(LeastSquares {
        weights,
        regularized: true,
    })
}

fn qr_solve(phi: &Matrix, t: &Matrix) -> Option<Matrix> {
    let (n, p) = (phi.rows, phi.cols);
    let m = t.cols;
    // Column-major working copies make the Householder sweeps contiguous.
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| phi.col_vec(j)).collect();
    let mut b: Vec<Vec<f64>> = (0..m).map(|j| t.col_vec(j)).collect();
    let mut diag = vec![0.0; p];
    for k in 0..p {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = alpha;
        a[k][k] = alpha;
        for x in a[k][k + 1..].iter_mut() {
            *x = 0.0;
        }
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |col: &mut Vec<f64>| {
            let dot: f64 = v.iter().zip(&col[k..]).map(|(x, y)| x * y).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        };
        for col in a[k + 1..].iter_mut() {
            reflect(col);
        }
        for col in b.iter_mut() {
            reflect(col);
        }
    }
    let rmax = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let tol = 1e-10 * rmax.max(f64::MIN_POSITIVE) * (n.max(p) as f64).sqrt();
    if diag.iter().any(|d| !(d.abs() > tol)) {
        return None;
    }
    let mut w = Matrix::zeros(p, m);
    for c in 0..m {
        for i in (0..p).rev() {
            let mut s = b[c][i];
            for j in i + 1..p {
                s -= a[j][i] * w[(j, c)];
            }
            w[(i, c)] = s / a[i][i];
        }
    }
    Some(w)
}

/// `‖Phiᵀ(Phi·W − T)‖∞` and the backward-error scale
/// `‖Phiᵀ‖∞ · (‖Phi‖∞·‖W‖∞ + ‖T‖∞)` it should be compared against.
pub fn normal_equation_residual(phi: &Matrix, w: &Matrix, t: &Matrix) -> Result<(f64, f64)> {
    let r = phi.matmul(w)?.sub(t)?;
    let g = phi.t_matmul(&r)?;
    let scale = phi.transpose().norm_inf() * (phi.norm_inf() * w.norm_inf() + t.norm_inf());
    Ok((g.max_abs(), scale.max(1.0)))
}

/// `‖A·x − b‖∞` and the scale `‖A‖∞·‖x‖∞ + ‖b‖∞`.
pub fn linear_residual(a: &Matrix, x: &Matrix, b: &Matrix) -> Result<(f64, f64)> {
    let r = a.matmul(x)?.sub(b)?;
    let scale = a.norm_inf() * x.norm_inf() + b.norm_inf();
    Ok((r.max_abs(), scale.max(1.0)))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let x = solve_linear(&Matrix::identity(3), &Matrix::column(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn diagonal_solve() {
        let a = Matrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]).unwrap();
        let x = solve_linear(&a, &Matrix::column(&[2.0, 8.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn rank_deficient_is_singular() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let err = solve_linear(&a, &Matrix::column(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let x = solve_linear(&a, &Matrix::column(&[3.0, 5.0])).unwrap();
        assert_eq!(x.as_slice(), &[5.0, 3.0]);
    }

    #[test]
    fn consistent_line_fit() {
        let phi = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let t = Matrix::column(&[2.0, 4.0, 6.0]);
        let ls = least_squares(&phi, &t).unwrap();
        assert!((ls.weights[(0, 0)] - 2.0).abs() < 1e-14);
        assert!(!ls.regularized);
        let (res, _) = normal_equation_residual(&phi, &ls.weights, &t).unwrap();
        assert!(res < 1e-12);
    }

    #[test]
    fn zero_targets_give_zero_weights() {
        let phi = Matrix::from_rows(&[[1.0, 0.5], [2.0, -1.0], [3.0, 0.0]]).unwrap();
        let ls = least_squares(&phi, &Matrix::zeros(3, 2)).unwrap();
        assert!(ls.weights.max_abs() == 0.0);
    }

    #[test]
    fn rank_deficient_least_squares_is_flagged() {
        let phi = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let t = Matrix::column(&[1.0, 2.0, 3.0]);
        let ls = least_squares(&phi, &t).unwrap();
        assert!(ls.regularized);
        let fit = phi.matmul(&ls.weights).unwrap();
        for i in 0..3 {
            assert!((fit[(i, 0)] - t[(i, 0)]).abs() < 1e-6);
        }
    }

    #[test]
    fn underdetermined_is_rejected() {
        let phi = Matrix::zeros(1, 2);
        assert!(least_squares(&phi, &Matrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn cholesky_round_trip() {
        let a = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let l = cholesky(&a).unwrap();
        let x = cholesky_solve(&l, &Matrix::column(&[2.0, 1.0])).unwrap();
        let (r, s) = linear_residual(&a, &x, &Matrix::column(&[2.0, 1.0])).unwrap();
        assert!(r <= 1e-14 * s);
    }
}

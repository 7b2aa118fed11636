//! Dense row-major matrices, complex LU with partial pivoting, and a
//! Tikhonov-regularized real least-squares solver.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy + Zero> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape("row-major data length != rows * cols"));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Copy `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix<T>) {
        for i in 0..block.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + block.cols].copy_from_slice(block.row(i));
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }
}

impl<T: Copy + Zero + core::ops::Mul<Output = T> + core::ops::AddAssign> Matrix<T> {
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for (a, b) in self.row(i).iter().zip(x) {
                    acc += *a * *b;
                }
                acc
            })
            .collect()
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * *b;
                }
            }
        }
        out
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Relative pivot threshold below which a matrix is reported singular.
const PIVOT_TOL: f64 = 1e-14;

/// LU factorization `P M = L U` of a square complex matrix.
#[derive(Clone, Debug)]
pub struct ComplexLu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl ComplexLu {
    pub fn new(m: &Matrix<Complex64>) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::Shape("LU needs a square matrix"));
        }
        let n = m.rows;
        let mut lu = m.data.clone();
        let scale = lu.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        let tol = PIVOT_TOL * scale.max(f64::MIN_POSITIVE);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, mag) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if mag <= tol {
                return Err(Error::Singular { pivot: mag });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = lu[k * n + k].inv();
            for i in k + 1..n {
                let f = lu[i * n + k] * inv;
                lu[i * n + k] = f;
                if f.is_zero() {
                    continue;
                }
                let (upper, lower) = lu.split_at_mut(i * n);
                let pivot_row = &upper[k * n + k + 1..k * n + n];
                for (dst, src) in lower[k + 1..n].iter_mut().zip(pivot_row) {
                    *dst -= f * *src;
                }
            }
        }
        Ok(ComplexLu { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n, "right-hand side length");
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: Complex64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: Complex64 = row.iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Solve for every column of `b`.
    pub fn solve_matrix(&self, b: &Matrix<Complex64>) -> Matrix<Complex64> {
        let mut out = Matrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let x = self.solve(&b.column(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// Exact 1-norm of the inverse, by solving for every unit vector.
    pub fn inverse_norm1(&self) -> f64 {
        let mut best = 0.0_f64;
        let mut e = vec![Complex64::zero(); self.n];
        for j in 0..self.n {
            e[j] = Complex64::new(1.0, 0.0);
            let col = self.solve(&e);
            best = best.max(col.iter().map(|z| z.norm()).sum());
            e[j] = Complex64::zero();
        }
        best
    }
}

/// Matrix 1-norm (maximum absolute column sum).
pub fn norm1(m: &Matrix<Complex64>) -> f64 {
    (0..m.cols).map(|j| (0..m.rows).map(|i| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// 1-norm condition number of a square complex matrix.
pub fn condition_number1(m: &Matrix<Complex64>) -> Result<f64> {
    let lu = ComplexLu::new(m)?;
    Ok(norm1(m) * lu.inverse_norm1())
}

/// Minimize `|A x - b|^2 + lambda |x|^2`.
///
/// Normal equations with Cholesky. When `A^T A + lambda I` is not positive
/// definite (rank-deficient with `lambda = 0`) the minimum-norm solution is
/// returned from an eigen-decomposition of `A^T A`.
pub fn tikhonov_lstsq(a: &Matrix<f64>, b: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if a.rows == 0 || a.cols == 0 {
        return Err(Error::Shape("least squares needs a nonempty matrix"));
    }
    if b.len() != a.rows {
        return Err(Error::Shape("right-hand side length != rows"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Domain("Tikhonov weight must be >= 0"));
    }
    let n = a.cols;
    let mut gram = Matrix::<f64>::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for r in 0..a.rows {
        let row = a.row(r);
        for i in 0..n {
            rhs[i] += row[i] * b[r];
            for j in 0..=i {
                gram[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            gram[(j, i)] = gram[(i, j)];
        }
    }
    let trace = (0..n).map(|i| gram[(i, i)]).sum::<f64>();
    let mut reg = gram.clone();
    for i in 0..n {
        reg[(i, i)] += lambda;
    }
    if let Some(l) = cholesky(&reg, 1e-13 * trace.max(f64::MIN_POSITIVE)) {
        return Ok(cholesky_solve(&l, &rhs));
    }
    let (values, vectors) = symmetric_eigen(&gram);
    let vmax = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cutoff = vmax * 1e-12 * n as f64;
    let mut x = vec![0.0; n];
    for (k, &ev) in values.iter().enumerate() {
        if ev + lambda <= cutoff {
            continue;
        }
        let proj: f64 = (0..n).map(|i| vectors[(i, k)] * rhs[i]).sum::<f64>() / (ev + lambda);
        for i in 0..n {
            x[i] += proj * vectors[(i, k)];
        }
    }
    Ok(x)
}

fn cholesky(m: &Matrix<f64>, tol: f64) -> Option<Matrix<f64>> {
    let n = m.rows;
    let mut l = Matrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &Matrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Eigenvectors are
/// the columns of the returned matrix.
fn symmetric_eigen(m: &Matrix<f64>) -> (Vec<f64>, Matrix<f64>) {
    let n = m.rows;
    let mut a = m.clone();
    let mut v = Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 });
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[(i, j)] * a[(i, j)]).sum();
        let diag: f64 = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let m = Matrix::from_fn(4, 4, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::zero() });
        let b: Vec<_> = (0..4).map(|i| Complex64::new(i as f64, -2.0 * i as f64)).collect();
        assert_eq!(ComplexLu::new(&m).unwrap().solve(&b), b);
    }

    #[test]
    fn random_system_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let m = Matrix::from_fn(n, n, |i, j| {
            let z = Complex64::new(uniform(&mut rng), uniform(&mut rng));
            if i == j { z + 10.0 } else { z }
        });
        let b: Vec<_> = (0..n).map(|_| Complex64::new(uniform(&mut rng), uniform(&mut rng))).collect();
        let lu = ComplexLu::new(&m).unwrap();
        let x = lu.solve(&b);
        let r = m.mul_vec(&x);
        let res: f64 = r.iter().zip(&b).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(res <= 1e-10 * nb);
    }

    #[test]
    fn zero_row_is_singular() {
        let mut m = Matrix::from_fn(3, 3, |i, j| Complex64::new((i + 2 * j + 1) as f64, (i * j) as f64));
        for j in 0..3 {
            m[(1, j)] = Complex64::zero();
        }
        match ComplexLu::new(&m) {
            Err(Error::Singular { pivot }) => assert!(pivot < 1e-12),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn tikhonov_identity_and_overdetermined() {
        let eye = Matrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let x = tikhonov_lstsq(&eye, &[1.0, -2.0, 3.5], 0.0).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.5]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Matrix::from_fn(20, 5, |_, _| uniform(&mut rng));
        let truth = [0.3, -1.0, 2.0, 0.5, -0.25];
        let b = a.mul_vec(&truth);
        let x = tikhonov_lstsq(&a, &b, 0.0).unwrap();
        for (u, v) in x.iter().zip(&truth) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn tikhonov_large_penalty_shrinks_to_zero() {
        let a = Matrix::from_fn(4, 2, |i, j| (i + j) as f64 + 1.0);
        let x = tikhonov_lstsq(&a, &[1.0, 2.0, 3.0, 4.0], 1e12).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn rank_deficient_gives_minimum_norm() {
        // duplicated column: min-norm solution splits the weight evenly
        let a = Matrix::from_fn(3, 2, |i, _| (i + 1) as f64);
        let x = tikhonov_lstsq(&a, &[2.0, 4.0, 6.0], 0.0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 1.0).abs() < 1e-10, "{x:?}");
    }
}

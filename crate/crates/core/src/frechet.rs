//! Frechet derivative of the crack-to-far-field map and the Newton Jacobian.
//!
//! The derivative is taken of the discrete forward map itself: with
//! `S psi = -u^i` on the nodes and `F = C (pi/n) sum e^{-ik xh.y} psi`,
//! a displacement `h` gives
//!
//! ```text
//! F'(h) = v1 + v2 + v3
//! v1 = -C (pi/n) sum (ik xh.h) e^{-ik xh.y} psi
//! v2 = far field of -S^{-1} (S' psi)
//! v3 = far field of  S^{-1} (h . grad(-u^i))
//! ```
//!
//! so it agrees with central differences of [`synthesize`](crate::forward::synthesize)
//! up to the difference truncation error.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result, Singular};
use crate::forward::{
    common_n, far_field_constant, far_field_of, fold, incident, solve_density_on_grids, split_geometry,
    DensitySolution,
};
use crate::geometry::{chebyshev_each, CrackSet, NystromGrid, Point2};
use crate::numerics::bessel::{hankel1_1, kernel_parts};
use crate::numerics::{LogWeightTable, Matrix};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Displacement field sampled at the grid nodes, with its `s`-derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    /// `h_j(s_i)` per crack.
    pub h: Vec<Vec<Point2>>,
    /// `h_j'(s_i)` per crack.
    pub dh: Vec<Vec<Point2>>,
}

impl Perturbation {
    pub fn zero(grids: &[NystromGrid]) -> Self {
        let h: Vec<Vec<Point2>> = grids.iter().map(|g| alloc::vec![Point2::default(); g.n]).collect();
        Perturbation { dh: h.clone(), h }
    }

    /// Samples `f(crack, s) = (h(s), h'(s))` at every node.
    pub fn from_fn(grids: &[NystromGrid], mut f: impl FnMut(usize, f64) -> (Point2, Point2)) -> Result<Self> {
        let mut out = Perturbation { h: Vec::new(), dh: Vec::new() };
        for (c, g) in grids.iter().enumerate() {
            let (h, dh): (Vec<_>, Vec<_>) = g.s.iter().map(|&s| f(c, s)).unzip();
            if h.iter().chain(&dh).any(|p| !(p.x.is_finite() && p.y.is_finite())) {
                return Err(Error::Domain("perturbation samples must be finite"));
            }
            out.h.push(h);
            out.dh.push(dh);
        }
        Ok(out)
    }

    /// `(0, T_i(s))` on crack `crack`, zero elsewhere.
    pub fn vertical(grids: &[NystromGrid], crack: usize, i: usize) -> Self {
        Self::single(grids, crack, |s| {
            let (mut t, mut dt) = (0.0, 0.0);
            chebyshev_each(s, i + 1, |m, tm, dm| {
                if m == i {
                    t = tm;
                    dt = dm;
                }
            });
            (Point2::new(0.0, t), Point2::new(0.0, dt))
        })
    }

    /// `(s^i, 0)` on crack `crack`, zero elsewhere; `i` is 0 or 1.
    pub fn horizontal(grids: &[NystromGrid], crack: usize, i: usize) -> Self {
        Self::single(grids, crack, |s| match i {
            0 => (Point2::new(1.0, 0.0), Point2::default()),
            _ => (Point2::new(s, 0.0), Point2::new(1.0, 0.0)),
        })
    }

    fn single(grids: &[NystromGrid], crack: usize, f: impl Fn(f64) -> (Point2, Point2)) -> Self {
        let mut p = Self::zero(grids);
        for (i, &s) in grids[crack].s.iter().enumerate() {
            let (h, dh) = f(s);
            p.h[crack][i] = h;
            p.dh[crack][i] = dh;
        }
        p
    }

    pub fn scaled(&self, a: f64) -> Self {
        let map = |v: &Vec<Vec<Point2>>| v.iter().map(|c| c.iter().map(|p| *p * a).collect()).collect();
        Perturbation { h: map(&self.h), dh: map(&self.dh) }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Perturbation) -> Self {
        let comb = |x: &Vec<Vec<Point2>>, y: &Vec<Vec<Point2>>| {
            x.iter().zip(y).map(|(u, v)| u.iter().zip(v).map(|(p, q)| *p + *q * a).collect()).collect()
        };
        Perturbation { h: comb(&self.h, &other.h), dh: comb(&self.dh, &other.dh) }
    }

    /// Grids of `Sigma + eps h`.
    pub fn apply(&self, grids: &[NystromGrid], eps: f64) -> Vec<NystromGrid> {
        grids.iter().enumerate().map(|(c, g)| g.perturbed(&self.h[c], &self.dh[c], eps)).collect()
    }

    fn is_zero_on(&self, crack: usize) -> bool {
        self.h[crack].iter().chain(&self.dh[crack]).all(|p| p.x == 0.0 && p.y == 0.0)
    }
}

/// `h(s_i) . grad f(z(s_i))` per crack, given the gradient at the nodes.
pub fn dz_trace(h: &Perturbation, grad: &[Vec<[Complex64; 2]>]) -> Vec<Vec<Complex64>> {
    h.h.iter()
        .zip(grad)
        .map(|(hc, gc)| hc.iter().zip(gc).map(|(h, g)| g[0] * h.x + g[1] * h.y).collect())
        .collect()
}

/// `grad u^i = ik d e^{ik x.d}` at the nodes.
pub fn incident_gradient(grids: &[NystromGrid], k: f64, d: Point2) -> Vec<Vec<[Complex64; 2]>> {
    grids
        .iter()
        .map(|g| {
            g.points
                .iter()
                .map(|&x| {
                    let u = I * k * incident(k, d, x);
                    [u * d.x, u * d.y]
                })
                .collect()
        })
        .collect()
}

/// Derivative `(A', B')` of the split kernel of the half kernel `(1/2) Phi_k`
/// under `z -> z + eps h`, at a pair of distinct parameters.
///
/// `P = (x - y) . (h_x - h_y)` is the rate of `r^2 / 2`; then
/// `A' = k J1(kr) P / (8 pi r)` and
/// `B' = -(k/2)(P/r) G1(kr) + (k/4pi)(P/r) J1(kr) [ln k + ln(Q/4)/2] - P / (4 pi r^2)`.
pub(crate) fn split_derivative(k: f64, r: f64, lnq4: f64, p: f64) -> (Complex64, Complex64) {
    let q = kernel_parts(k * r);
    let pr = p / r;
    let a = Complex64::new(k * q.j1 * pr / (8.0 * PI), 0.0);
    let b = -q.g1 * (0.5 * k * pr) + k / (4.0 * PI) * pr * q.j1 * (k.ln() + 0.5 * lnq4) - p / (4.0 * PI * r * r);
    (a, b)
}

/// Diagonal limit `B'(t, t) = -(z'.h') / (4 pi |z'|^2)`; `A'(t, t) = 0`.
pub(crate) fn split_derivative_diagonal(dz: Point2, dh: Point2) -> Complex64 {
    Complex64::new(-dz.dot(dh) / (4.0 * PI * dz.dot(dz)), 0.0)
}

/// `grad_x Phi_k(x, y) = -(ik/4) H1(k r) (x - y) / r`.
pub fn fundamental_gradient(k: f64, x: Point2, y: Point2) -> [Complex64; 2] {
    let diff = x - y;
    let r = diff.norm();
    let c = -I * k * 0.25 * hankel1_1(k * r) / r;
    [c * diff.x, c * diff.y]
}

/// Derivative `S'` of the assembled single-layer matrix in direction `h`.
pub fn ds_assemble(grids: &[NystromGrid], h: &Perturbation, k: f64) -> Result<Matrix<Complex64>> {
    let n = common_n(grids)?;
    let table = LogWeightTable::new(n);
    let mut m = Matrix::zeros(n * grids.len(), n * grids.len());
    for (a, ga) in grids.iter().enumerate() {
        for (b, gb) in grids.iter().enumerate() {
            if h.is_zero_on(a) && h.is_zero_on(b) {
                continue;
            }
            let block = if a == b {
                self_block_derivative(ga, &h.h[a], &h.dh[a], &table, k)
            } else {
                cross_block_derivative(ga, &h.h[a], gb, &h.h[b], k)
            };
            m.set_block(a * n, b * n, &block);
        }
    }
    Ok(m)
}

fn self_block_derivative(
    grid: &NystromGrid,
    h: &[Point2],
    dh: &[Point2],
    table: &LogWeightTable,
    k: f64,
) -> Matrix<Complex64> {
    let n = grid.n;
    let w = PI / n as f64;
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        let x = grid.points[i];
        let diag = split_derivative_diagonal(grid.dz[i], dh[i]);
        for je in 0..2 * n {
            let j = fold(n, je);
            if i == j {
                out[(i, j)] += diag * w;
                continue;
            }
            let (r, lnq4) = split_geometry(grid.s[i], x, grid.dz[i], grid.s[j], grid.points[j], false);
            let p = (x - grid.points[j]).dot(h[i] - h[j]);
            if p == 0.0 {
                continue;
            }
            let (da, db) = split_derivative(k, r, lnq4, p);
            out[(i, j)] += da * table.folded(i, je) + db * w;
        }
    }
    out
}

fn cross_block_derivative(
    target: &NystromGrid,
    ht: &[Point2],
    source: &NystromGrid,
    hs: &[Point2],
    k: f64,
) -> Matrix<Complex64> {
    let w = PI / source.n as f64;
    Matrix::from_fn(target.n, source.n, |i, j| {
        let g = fundamental_gradient(k, target.points[i], source.points[j]);
        let dh = ht[i] - hs[j];
        (g[0] * dh.x + g[1] * dh.y) * w
    })
}

/// `F'(h)` at the solved configuration, sampled in `directions`.
pub fn frechet_farfield(sol: &DensitySolution, h: &Perturbation, directions: &[Point2]) -> Result<Vec<Complex64>> {
    let (k, grids) = (sol.k, &sol.grids);
    let n = common_n(grids)?;

    // v2 + v3 share one solve: S^{-1} (h . grad(-u^i) - S' psi)
    let mut rhs: Vec<Complex64> = dz_trace(h, &incident_gradient(grids, k, sol.d))
        .into_iter()
        .flatten()
        .map(|z| -z)
        .collect();
    let ds = ds_assemble(grids, h, k)?;
    for (r, v) in rhs.iter_mut().zip(ds.mul_vec(&sol.psi)) {
        *r -= v;
    }
    let dpsi = sol.solve_again(&rhs);
    let mut out = far_field_of(grids, k, &dpsi, directions);

    let c = far_field_constant(k);
    let w = PI / n as f64;
    for (v, xh) in out.iter_mut().zip(directions) {
        let mut acc = Complex64::zero();
        for (cr, g) in grids.iter().enumerate() {
            for ((y, hy), p) in g.points.iter().zip(&h.h[cr]).zip(sol.psi_block(cr)) {
                acc += I * k * xh.dot(*hy) * Complex64::from_polar(w, -k * xh.dot(*y)) * p;
            }
        }
        *v -= c * acc;
    }
    Ok(out)
}

/// One basis displacement of the Newton update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisElement {
    /// `(0, T_i(s))` on `crack`.
    Vertical { crack: usize, i: usize },
    /// `(s^i, 0)` on `crack`, `i` in `{0, 1}`.
    Horizontal { crack: usize, i: usize },
}

impl BasisElement {
    pub fn perturbation(&self, grids: &[NystromGrid]) -> Perturbation {
        match *self {
            BasisElement::Vertical { crack, i } => Perturbation::vertical(grids, crack, i),
            BasisElement::Horizontal { crack, i } => Perturbation::horizontal(grids, crack, i),
        }
    }
}

/// Column layout: per crack, vertical `T_0..T_p`, then horizontal `1, s`
/// when enabled for that crack.
pub fn basis(p: &[usize], horizontal: &[bool]) -> Vec<BasisElement> {
    let mut out = Vec::new();
    for (crack, &pc) in p.iter().enumerate() {
        out.extend((0..=pc).map(|i| BasisElement::Vertical { crack, i }));
        if horizontal.get(crack).copied().unwrap_or(false) {
            out.extend((0..2).map(|i| BasisElement::Horizontal { crack, i }));
        }
    }
    out
}

/// Jacobian columns over a basis, `n_directions x n_params`.
#[derive(Clone, Debug)]
pub struct JacobianBlock {
    pub basis: Vec<BasisElement>,
    pub matrix: Matrix<Complex64>,
}

impl JacobianBlock {
    fn from_columns(basis: Vec<BasisElement>, rows: usize, cols: Vec<Vec<Complex64>>) -> Self {
        let matrix = Matrix::from_fn(rows, basis.len(), |r, c| cols[c][r]);
        JacobianBlock { basis, matrix }
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.matrix.column(j)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.as_slice().iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }
}

/// Analytic Jacobian: one [`frechet_farfield`] per basis element.
pub fn jacobian(sol: &DensitySolution, basis: Vec<BasisElement>, directions: &[Point2]) -> Result<JacobianBlock> {
    let cols = basis
        .iter()
        .map(|b| frechet_farfield(sol, &b.perturbation(&sol.grids), directions))
        .collect::<Result<Vec<_>>>()?;
    Ok(JacobianBlock::from_columns(basis, directions.len(), cols))
}

/// Central-difference Jacobian of the discrete forward map with step `eps`.
pub fn fd_jacobian(
    cracks: &CrackSet,
    n: usize,
    k: f64,
    d: Point2,
    basis: Vec<BasisElement>,
    directions: &[Point2],
    eps: f64,
) -> Result<JacobianBlock> {
    if !(eps > 0.0) {
        return Err(Error::Domain("finite-difference step must be positive"));
    }
    cracks.ensure_valid()?;
    let grids = cracks.grids(n)?;
    fd_jacobian_on_grids(&grids, k, d, basis, directions, eps)
}

pub(crate) fn fd_jacobian_on_grids(
    grids: &[NystromGrid],
    k: f64,
    d: Point2,
    basis: Vec<BasisElement>,
    directions: &[Point2],
    eps: f64,
) -> Result<JacobianBlock> {
    let mut cols = Vec::with_capacity(basis.len());
    for (idx, b) in basis.iter().enumerate() {
        let h = b.perturbation(grids);
        let far = |e: f64| -> Result<Vec<Complex64>> {
            let sol = solve_density_on_grids(h.apply(grids, e), k, d).map_err(|err| match err {
                Error::Singular { pivot } => Error::Perturbed { basis_index: idx, source: Singular { pivot } },
                other => other,
            })?;
            Ok(sol.far_field(directions).values)
        };
        let (plus, minus) = (far(eps)?, far(-eps)?);
        cols.push(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * eps)).collect());
    }
    Ok(JacobianBlock::from_columns(basis, directions.len(), cols))
}

//! Laplace operators on the cracks, the modified small-`k` representation
//! `u = u^i + S_k (W - (2 pi / ln k) I) phi`, and the harmonic profile `v`
//! that governs the limit `u(., k) ~ -(2 pi / ln k) v`.
//!
//! All operators act on concatenated `psi`-coordinates. In these
//! coordinates the constant density `phi = 1` is `psi_j = m_j` (the arc
//! weights), `L psi = (pi/n) sum_j psi_j`, and `W psi = psi - (L psi / |S|) m`
//! with the discrete length `|S| = L m`, so that `L W = 0` and `W^2 = W`
//! hold exactly.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::{
    assemble_split_block, common_n, helmholtz_split, incident, near_boundary, single_layer_at,
    split_layer_at,
};
use crate::geometry::{CrackSet, NystromGrid, Point2};
use crate::numerics::linalg::condition_number1;
use crate::numerics::{ComplexLu, LogWeightTable, Matrix};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Mean-value operators `L` and `W` on a fixed set of grids.
#[derive(Clone, Debug)]
pub struct MeanOperators {
    h: f64,
    /// Concatenated arc weights, the `psi` of the constant density 1.
    pub ones: Vec<f64>,
    /// Discrete total length `L(ones)`.
    pub length: f64,
}

impl MeanOperators {
    pub fn new(grids: &[NystromGrid]) -> Result<Self> {
        let n = common_n(grids)?;
        let h = PI / n as f64;
        let ones: Vec<f64> = grids.iter().flat_map(|g| g.arcw.iter().copied()).collect();
        let length = h * ones.iter().sum::<f64>();
        Ok(MeanOperators { h, ones, length })
    }

    /// `L psi = int_S phi ds`.
    pub fn apply_l(&self, psi: &[Complex64]) -> Complex64 {
        psi.iter().sum::<Complex64>() * self.h
    }

    /// `W psi = psi - (L psi / |S|) * ones`.
    pub fn apply_w(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mean = self.apply_l(psi) / self.length;
        psi.iter().zip(&self.ones).map(|(p, m)| p - mean * *m).collect()
    }

    /// Dense matrix of `W`.
    pub fn w_matrix(&self) -> Matrix<Complex64> {
        let c = self.h / self.length;
        Matrix::from_fn(self.ones.len(), self.ones.len(), |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            Complex64::new(delta - c * self.ones[i], 0.0)
        })
    }
}

/// Laplace split: `(1/2) Phi_0 = -(1/4 pi) ln r = -(1/8 pi) (L- + L+) - (1/8 pi) ln(Q/4)`.
fn laplace_split(_r: f64, lnq4: f64) -> (Complex64, Complex64) {
    (Complex64::new(-1.0 / (8.0 * PI), 0.0), Complex64::new(-lnq4 / (8.0 * PI), 0.0))
}

/// `Phi_0(x, y) = -(1/2 pi) ln |x - y|`.
fn laplace_fundamental(x: Point2, y: Point2) -> f64 {
    -x.dist(y).ln() / (2.0 * PI)
}

/// Discrete `S_0` over all cracks.
pub fn assemble_laplace(grids: &[NystromGrid]) -> Result<Matrix<Complex64>> {
    let n = common_n(grids)?;
    let table = LogWeightTable::new(n);
    let h = PI / n as f64;
    let mut m = Matrix::zeros(n * grids.len(), n * grids.len());
    for (a, ga) in grids.iter().enumerate() {
        for (b, gb) in grids.iter().enumerate() {
            let block = if a == b {
                assemble_split_block(ga, &table, laplace_split)
            } else {
                Matrix::from_fn(n, n, |i, j| Complex64::new(laplace_fundamental(ga.points[i], gb.points[j]) * h, 0.0))
            };
            m.set_block(a * n, b * n, &block);
        }
    }
    Ok(m)
}

/// `k = 0` system with the solved profile density `rho = A^{-1} S_0(1)`.
#[derive(Clone, Debug)]
pub struct LaplaceSystem {
    pub grids: Vec<NystromGrid>,
    pub mean: MeanOperators,
    pub s0: Matrix<Complex64>,
    /// `A = S_0 W + L`.
    pub a: Matrix<Complex64>,
    a_lu: ComplexLu,
    /// `S_0(1)` at the collocation nodes.
    pub s0_one: Vec<Complex64>,
    pub rho: Vec<Complex64>,
}

/// Assemble `S_0`, `A` and solve for `rho`.
pub fn solve_profile(cracks: &CrackSet, n: usize) -> Result<LaplaceSystem> {
    cracks.ensure_valid()?;
    let grids = cracks.grids(n)?;
    let mean = MeanOperators::new(&grids)?;
    let s0 = assemble_laplace(&grids)?;
    let mut a = s0.matmul(&mean.w_matrix());
    let h = PI / n as f64;
    // rank-one L term: every row picks up (pi/n) sum_j psi_j
    for i in 0..a.rows() {
        for v in a.row_mut(i) {
            *v += h;
        }
    }
    let a_lu = ComplexLu::new(&a)?;
    let ones: Vec<Complex64> = mean.ones.iter().map(|&m| Complex64::new(m, 0.0)).collect();
    let s0_one = s0.mul_vec(&ones);
    let rho = a_lu.solve(&s0_one);
    Ok(LaplaceSystem { grids, mean, s0, a, a_lu, s0_one, rho })
}

/// Value of the profile `v` with a near-boundary flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileValue {
    pub v: Complex64,
    pub near_boundary: bool,
}

impl LaplaceSystem {
    pub fn solve_a(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        self.a_lu.solve(rhs)
    }

    /// Density `(W rho - 1) / |S|` whose single layer plus `L rho / |S|` is `v`.
    ///
    /// The two terms of `v` are combined before the potential is evaluated:
    /// each alone carries the tip behaviour of the constant density, which the
    /// rectangle rule resolves poorly, while their difference is the smooth
    /// equilibrium density.
    fn profile_density(&self) -> (Vec<Complex64>, Complex64) {
        let w_rho = self.mean.apply_w(&self.rho);
        let len = self.mean.length;
        let density = w_rho.iter().zip(&self.mean.ones).map(|(w, m)| (w - *m) / len).collect();
        (density, self.mean.apply_l(&self.rho) / len)
    }

    /// `v(x) = (1/|S|) [S_0(W rho)(x) + L rho - S_0(1)(x)]` for `x` off the cracks.
    pub fn eval_v(&self, x: Point2) -> ProfileValue {
        let (density, shift) = self.profile_density();
        let mut acc = shift;
        let mut off = 0;
        for g in &self.grids {
            let h = PI / g.n as f64;
            for (y, p) in g.points.iter().zip(&density[off..off + g.n]) {
                acc += p * laplace_fundamental(x, *y) * h;
            }
            off += g.n;
        }
        ProfileValue { v: acc, near_boundary: near_boundary(&self.grids, x) }
    }

    /// `v` at the boundary point `z_c(cos t)` by the log-split rule.
    pub fn v_on_boundary(&self, c: usize, t: f64, point: Point2, deriv: Point2) -> Complex64 {
        let (density, shift) = self.profile_density();
        let n = self.grids[0].n;
        let mut acc = shift;
        for (b, g) in self.grids.iter().enumerate() {
            let block = &density[b * n..(b + 1) * n];
            if b == c {
                acc += split_layer_at(g, t, point, deriv, laplace_split, block);
            } else {
                let h = PI / n as f64;
                for (y, p) in g.points.iter().zip(block) {
                    acc += p * laplace_fundamental(point, *y) * h;
                }
            }
        }
        acc
    }
}

/// Solution of `S_k (W - (2 pi / ln k) I) phi = -u^i` for `0 < k < 1`.
#[derive(Clone, Debug)]
pub struct ModifiedSolution {
    pub k: f64,
    pub d: Point2,
    pub grids: Vec<NystromGrid>,
    pub phi: Vec<Complex64>,
    /// `(W - (2 pi / ln k) I) phi`, the density fed to the potential.
    pub chi: Vec<Complex64>,
    system: Matrix<Complex64>,
}

/// Solve the modified representation; `k` must lie in `(0, 1)`.
pub fn modified_solve(cracks: &CrackSet, n: usize, k: f64, d: Point2) -> Result<ModifiedSolution> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain("modified representation needs 0 < k < 1"));
    }
    cracks.ensure_valid()?;
    let grids = cracks.grids(n)?;
    let mean = MeanOperators::new(&grids)?;
    let sk = crate::forward::assemble_system(&grids, k)?;
    let mut shifted = mean.w_matrix();
    let c = 2.0 * PI / k.ln();
    for i in 0..shifted.rows() {
        shifted[(i, i)] -= c;
    }
    let system = sk.matmul(&shifted);
    let lu = ComplexLu::new(&system)?;
    let rhs: Vec<Complex64> = grids.iter().flat_map(|g| g.points.iter().map(|&x| -incident(k, d, x))).collect();
    let phi = lu.solve(&rhs);
    let chi = shifted.mul_vec(&phi);
    Ok(ModifiedSolution { k, d, grids, phi, chi, system })
}

impl ModifiedSolution {
    pub fn total_field(&self, x: Point2) -> Complex64 {
        incident(self.k, self.d, x) + single_layer_at(&self.grids, self.k, &self.chi, x)
    }

    /// Total field on crack `c` at parameter `t` by the log-split rule.
    pub fn boundary_total_field(&self, c: usize, t: f64, point: Point2, deriv: Point2) -> Complex64 {
        let n = self.grids[0].n;
        let mut u = incident(self.k, self.d, point);
        for (b, g) in self.grids.iter().enumerate() {
            let block = &self.chi[b * n..(b + 1) * n];
            if b == c {
                u += split_layer_at(g, t, point, deriv, helmholtz_split(self.k), block);
            } else {
                let h = PI / n as f64;
                for (y, p) in g.points.iter().zip(block) {
                    u += crate::forward::fundamental(self.k, point, *y) * h * p;
                }
            }
        }
        u
    }

    /// 1-norm condition number of the composed system matrix.
    pub fn condition_number(&self) -> Result<f64> {
        condition_number1(&self.system)
    }
}

/// One row of the asymptotic table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticError {
    pub k: f64,
    pub ln_k: f64,
    /// `max_x |(-ln k / 2 pi) u(x, k) - v(x)|`.
    pub error: f64,
}

/// Compare the scaled small-`k` total field with the profile `v`.
pub fn asymptotic_check(
    cracks: &CrackSet,
    n: usize,
    ks: &[f64],
    d: Point2,
    points: &[Point2],
) -> Result<Vec<AsymptoticError>> {
    if ks.iter().any(|&k| !(k > 0.0 && k < 0.1)) {
        return Err(Error::Domain("asymptotic check needs 0 < k < 0.1"));
    }
    let profile = solve_profile(cracks, n)?;
    let v: Vec<Complex64> = points.iter().map(|&x| profile.eval_v(x).v).collect();
    ks.iter()
        .map(|&k| {
            let sol = modified_solve(cracks, n, k, d)?;
            let scale = -k.ln() / (2.0 * PI);
            let error = points
                .iter()
                .zip(&v)
                .map(|(&x, vx)| (sol.total_field(x) * scale - vx).norm())
                .fold(0.0, f64::max);
            Ok(AsymptoticError { k, ln_k: k.ln(), error })
        })
        .collect()
}

/// Condition number of the plain single-layer system at wavenumber `k`.
pub fn plain_condition_number(cracks: &CrackSet, n: usize, k: f64) -> Result<f64> {
    let grids = cracks.grids(n)?;
    condition_number1(&crate::forward::assemble_system(&grids, k)?)
}

//! First-kind single-layer system `S_k psi = -u^i` on the cosine-substituted
//! cracks, far fields, near fields and the measurement noise model.
//!
//! Densities live in `psi`-coordinates: the physical density satisfies
//! `phi(z(cos t)) = psi(t) / (|z'(cos t)| sin t)`, which absorbs the
//! inverse square-root growth at the crack tips. Self-interaction blocks use
//! the even `2 pi`-periodic extension in `t` and split the kernel as
//! `A(t,tau) [ln 4 sin^2((t-tau)/2) + ln 4 sin^2((t+tau)/2)] + B(t,tau)`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use num_traits::Zero;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{CrackSet, NystromGrid, Point2};
use crate::numerics::bessel::{hankel1_0, kernel_parts};
use crate::numerics::quadrature::log_quad_weights;
use crate::numerics::{ComplexLu, LogWeightTable, Matrix};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Plane wave `e^{i k x . d}`.
pub fn incident(k: f64, d: Point2, x: Point2) -> Complex64 {
    Complex64::from_polar(1.0, k * x.dot(d))
}

/// Helmholtz fundamental solution `(i/4) H0(k |x - y|)`.
pub fn fundamental(k: f64, x: Point2, y: Point2) -> Complex64 {
    I * 0.25 * hankel1_0(k * x.dist(y))
}

/// Far-field factor `e^{i pi/4} / sqrt(8 pi k)`.
pub fn far_field_constant(k: f64) -> Complex64 {
    Complex64::from_polar(1.0 / (8.0 * PI * k).sqrt(), FRAC_PI_4)
}

/// Observation directions `(cos(2 pi j/N), sin(2 pi j/N))`, `j = 1..N`.
pub fn observation_directions(count: usize) -> Vec<Point2> {
    (1..=count)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / count as f64;
            Point2::new(a.cos(), a.sin())
        })
        .collect()
}

/// Index into the first `n` nodes for an extended index `j in 0..2n`.
#[inline]
pub(crate) fn fold(n: usize, j: usize) -> usize {
    if j < n {
        j
    } else {
        2 * n - 1 - j
    }
}

/// Generic log-split assembly over the even extension.
///
/// `kernel(r, ln(Q/4))` returns `(A, B)` with the quadrature convention
/// `M = A (L- + L+) + B`, where `Q = r^2 / (cos t - cos tau)^2`, replaced by
/// its limit `|z'|^2` when the two parameters coincide (`r = 0`).
pub(crate) fn assemble_split_block(
    grid: &NystromGrid,
    table: &LogWeightTable,
    kernel: impl Fn(f64, f64) -> (Complex64, Complex64),
) -> Matrix<Complex64> {
    let n = grid.n;
    let h = PI / n as f64;
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        let x = grid.points[i];
        for je in 0..2 * n {
            let j = fold(n, je);
            let (r, lnq4) = split_geometry(grid.s[i], x, grid.dz[i], grid.s[j], grid.points[j], i == j);
            let (a, b) = kernel(r, lnq4);
            out[(i, j)] += a * table.folded(i, je) + b * h;
        }
    }
    out
}

/// `r = |x - y|` and `ln(Q/4)`.
#[inline]
pub(crate) fn split_geometry(s_t: f64, x: Point2, dx: Point2, s_tau: f64, y: Point2, same: bool) -> (f64, f64) {
    if same {
        (0.0, (0.25 * dx.dot(dx)).ln())
    } else {
        let r = x.dist(y);
        let ds = s_t - s_tau;
        (r, (0.25 * r * r / (ds * ds)).ln())
    }
}

/// Helmholtz split `(A, B)` for the half kernel `(1/2) Phi_k`.
pub(crate) fn helmholtz_split(k: f64) -> impl Fn(f64, f64) -> (Complex64, Complex64) {
    let lnk = k.ln();
    move |r, lnq4| {
        let p = kernel_parts(k * r);
        let a = Complex64::new(-p.j0 / (8.0 * PI), 0.0);
        let b = p.g * 0.5 - p.j0 / (4.0 * PI) * (lnk + 0.5 * lnq4);
        (a, b)
    }
}

/// Self-interaction block `S^{j,j}` of one crack.
pub fn assemble_selfblock(grid: &NystromGrid, k: f64) -> Matrix<Complex64> {
    assemble_split_block(grid, &LogWeightTable::new(grid.n), helmholtz_split(k))
}

/// Interaction block: rows collocate on `target`, columns carry the density of `source`.
pub fn assemble_crossblock(target: &NystromGrid, source: &NystromGrid, k: f64) -> Matrix<Complex64> {
    let h = PI / source.n as f64;
    Matrix::from_fn(target.n, source.n, |i, j| fundamental(k, target.points[i], source.points[j]) * h)
}

/// Full block matrix of the single-layer operator over all cracks.
pub fn assemble_system(grids: &[NystromGrid], k: f64) -> Result<Matrix<Complex64>> {
    let n = common_n(grids)?;
    let table = LogWeightTable::new(n);
    let mut m = Matrix::zeros(n * grids.len(), n * grids.len());
    for (a, ga) in grids.iter().enumerate() {
        for (b, gb) in grids.iter().enumerate() {
            let block = if a == b {
                assemble_split_block(ga, &table, helmholtz_split(k))
            } else {
                assemble_crossblock(ga, gb, k)
            };
            m.set_block(a * n, b * n, &block);
        }
    }
    Ok(m)
}

pub(crate) fn common_n(grids: &[NystromGrid]) -> Result<usize> {
    let n = grids.first().ok_or(Error::Shape("no cracks"))?.n;
    if grids.iter().any(|g| g.n != n) {
        return Err(Error::Shape("all cracks must share one node count"));
    }
    Ok(n)
}

/// Solved density with the factorization kept for further right-hand sides.
#[derive(Clone, Debug)]
pub struct DensitySolution {
    pub k: f64,
    pub d: Point2,
    pub grids: Vec<NystromGrid>,
    /// Concatenated per-crack `psi` values at the nodes.
    pub psi: Vec<Complex64>,
    lu: ComplexLu,
}

/// Density for the plane wave `(k, d)` scattered by `cracks`.
pub fn solve_density(cracks: &CrackSet, n: usize, k: f64, d: Point2) -> Result<DensitySolution> {
    cracks.ensure_valid()?;
    solve_density_on_grids(cracks.grids(n)?, k, d)
}

/// As [`solve_density`] on prebuilt (possibly perturbed) grids.
pub fn solve_density_on_grids(grids: Vec<NystromGrid>, k: f64, d: Point2) -> Result<DensitySolution> {
    if !(k > 0.0) {
        return Err(Error::Domain("wavenumber must be positive"));
    }
    let m = assemble_system(&grids, k)?;
    let lu = ComplexLu::new(&m)?;
    let rhs: Vec<Complex64> = grids.iter().flat_map(|g| g.points.iter().map(|&x| -incident(k, d, x))).collect();
    let psi = lu.solve(&rhs);
    Ok(DensitySolution { k, d, grids, psi, lu })
}

impl DensitySolution {
    pub fn n(&self) -> usize {
        self.grids[0].n
    }

    /// Density block of crack `j`.
    pub fn psi_block(&self, j: usize) -> &[Complex64] {
        let n = self.n();
        &self.psi[j * n..(j + 1) * n]
    }

    /// Apply `S_k^{-1}` with the retained factorization.
    pub fn solve_again(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        self.lu.solve(rhs)
    }

    pub fn far_field(&self, directions: &[Point2]) -> FarFieldSet {
        let values = far_field_of(&self.grids, self.k, &self.psi, directions);
        FarFieldSet { k: self.k, d: self.d, directions: directions.to_vec(), values, delta: 0.0, seed: None }
    }

    /// Scattered and total fields at points off the cracks.
    pub fn field_at(&self, points: &[Point2]) -> Vec<FieldValue> {
        points
            .iter()
            .map(|&x| {
                let scattered = single_layer_at(&self.grids, self.k, &self.psi, x);
                FieldValue {
                    scattered,
                    total: scattered + incident(self.k, self.d, x),
                    near_boundary: near_boundary(&self.grids, x),
                }
            })
            .collect()
    }

    /// Total field at the boundary point `z_c(cos t)` of crack `c`, for any
    /// `t in (0, pi)`, with the same log-split quadrature as the system.
    /// `point` and `deriv` are `z_c(cos t)` and `z_c'(cos t)`.
    pub fn boundary_total_field(&self, c: usize, t: f64, point: Point2, deriv: Point2) -> Complex64 {
        let mut u = incident(self.k, self.d, point);
        for (b, g) in self.grids.iter().enumerate() {
            let psi = self.psi_block(b);
            if b == c {
                u += split_layer_at(g, t, point, deriv, helmholtz_split(self.k), psi);
            } else {
                let h = PI / g.n as f64;
                for (y, p) in g.points.iter().zip(psi) {
                    u += fundamental(self.k, point, *y) * h * p;
                }
            }
        }
        u
    }
}

/// Log-split single layer of `psi` evaluated on its own crack at parameter `t`.
pub(crate) fn split_layer_at(
    grid: &NystromGrid,
    t: f64,
    point: Point2,
    deriv: Point2,
    kernel: impl Fn(f64, f64) -> (Complex64, Complex64),
    psi: &[Complex64],
) -> Complex64 {
    let n = grid.n;
    let h = PI / n as f64;
    let direct = log_quad_weights(n, t);
    let mirror = log_quad_weights(n, 2.0 * PI - t);
    let s_t = t.cos();
    let mut acc = Complex64::zero();
    for je in 0..2 * n {
        let j = fold(n, je);
        let same = s_t == grid.s[j];
        let (r, lnq4) = split_geometry(s_t, point, deriv, grid.s[j], grid.points[j], same);
        let (a, b) = kernel(r, lnq4);
        acc += (a * (direct[je] + mirror[je]) + b * h) * psi[j];
    }
    acc
}

/// Whether `x` is closer to a node than `10 pi / n` times the mean node
/// speed, where the rectangle rule for potentials loses accuracy.
pub(crate) fn near_boundary(grids: &[NystromGrid], x: Point2) -> bool {
    let (sum, count) = grids.iter().flat_map(|g| g.dz.iter()).fold((0.0, 0usize), |(s, c), d| (s + d.norm(), c + 1));
    let guard = 10.0 * PI / grids[0].n as f64 * sum / count as f64;
    grids.iter().flat_map(|g| g.points.iter()).any(|y| y.dist(x) < guard)
}

pub(crate) fn single_layer_at(grids: &[NystromGrid], k: f64, psi: &[Complex64], x: Point2) -> Complex64 {
    let mut u = Complex64::zero();
    let mut off = 0;
    for g in grids {
        let h = PI / g.n as f64;
        for (y, p) in g.points.iter().zip(&psi[off..off + g.n]) {
            u += fundamental(k, x, *y) * h * p;
        }
        off += g.n;
    }
    u
}

pub(crate) fn far_field_of(grids: &[NystromGrid], k: f64, psi: &[Complex64], directions: &[Point2]) -> Vec<Complex64> {
    let c = far_field_constant(k);
    directions
        .iter()
        .map(|xh| {
            let mut acc = Complex64::zero();
            let mut off = 0;
            for g in grids {
                let h = PI / g.n as f64;
                for (y, p) in g.points.iter().zip(&psi[off..off + g.n]) {
                    acc += Complex64::from_polar(h, -k * xh.dot(*y)) * p;
                }
                off += g.n;
            }
            c * acc
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldValue {
    pub scattered: Complex64,
    pub total: Complex64,
    /// The point lies within the accuracy guard of a crack node.
    pub near_boundary: bool,
}

/// Far-field samples for one wavenumber and incident direction.
#[derive(Clone, Debug, PartialEq)]
pub struct FarFieldSet {
    pub k: f64,
    pub d: Point2,
    pub directions: Vec<Point2>,
    pub values: Vec<Complex64>,
    /// Relative noise level applied to `values`.
    pub delta: f64,
    pub seed: Option<u64>,
}

impl FarFieldSet {
    pub fn norm(&self) -> f64 {
        l2(&self.values)
    }

    /// `F + delta |F| R / |R|` with `R` complex standard normal from `seed`.
    pub fn add_noise(&self, delta: f64, seed: u64) -> Result<FarFieldSet> {
        if !(delta >= 0.0) {
            return Err(Error::Domain("noise level must be >= 0"));
        }
        let mut out = self.clone();
        out.delta = delta;
        out.seed = Some(seed);
        if delta == 0.0 {
            return Ok(out);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<Complex64> = (0..self.values.len())
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        let scale = delta * self.norm() / l2(&noise);
        for (v, r) in out.values.iter_mut().zip(noise) {
            *v += r * scale;
        }
        Ok(out)
    }
}

pub fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// `|a - b| / |b|`.
pub fn relative_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let diff: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2(&diff) / l2(b)
}

/// Forward map at the default data geometry: solve and sample the far field.
pub fn synthesize(cracks: &CrackSet, n: usize, k: f64, d: Point2, directions: &[Point2]) -> Result<FarFieldSet> {
    Ok(solve_density(cracks, n, k, d)?.far_field(directions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::examples;
    use crate::geometry::{ChebCrack, Crack};

    #[test]
    fn self_block_is_complex_symmetric() {
        let g = NystromGrid::build(&examples::wavy_crack().cracks[0], 32).unwrap();
        let m = assemble_selfblock(&g, 3.0);
        for i in 0..32 {
            for j in 0..32 {
                assert!((m[(i, j)] - m[(j, i)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cross_blocks_are_transposes() {
        let set = examples::three_cracks();
        let grids = set.grids(16).unwrap();
        let ab = assemble_crossblock(&grids[0], &grids[2], 3.0);
        let ba = assemble_crossblock(&grids[2], &grids[0], 3.0);
        for i in 0..16 {
            for j in 0..16 {
                assert!((ab[(i, j)] - ba[(j, i)]).norm() < 1e-12);
                assert!(ab[(i, j)].norm() > 0.0);
            }
        }
    }

    #[test]
    fn cross_entries_decay_with_separation() {
        let a = NystromGrid::build(&Crack::from(ChebCrack::segment(0.0, 0.5, 0.0)), 8).unwrap();
        let near = NystromGrid::build(&Crack::from(ChebCrack::segment(0.0, 0.5, 2.0)), 8).unwrap();
        let far = NystromGrid::build(&Crack::from(ChebCrack::segment(0.0, 0.5, 4.0)), 8).unwrap();
        let mn = assemble_crossblock(&a, &near, 1.0);
        let mf = assemble_crossblock(&a, &far, 1.0);
        let sum = |m: &Matrix<Complex64>| m.as_slice().iter().map(|z| z.norm()).sum::<f64>();
        assert!(sum(&mf) < sum(&mn));
    }

    #[test]
    fn single_crack_system_is_self_block() {
        let g = NystromGrid::build(&examples::wavy_crack().cracks[0], 16).unwrap();
        let full = assemble_system(core::slice::from_ref(&g), 2.0).unwrap();
        assert_eq!(full, assemble_selfblock(&g, 2.0));
    }

    #[test]
    fn log_quadrature_of_constant_density() {
        // With A = -1/(8 pi), B = 0 and psi = 1, the collocated value is
        // -(1/(8 pi)) int_0^{2pi} [L- + L+] dtau = 0 exactly.
        let g = NystromGrid::build(&examples::wavy_crack().cracks[0], 16).unwrap();
        let m = assemble_split_block(&g, &LogWeightTable::new(16), |_, _| {
            (Complex64::new(-1.0 / (8.0 * PI), 0.0), Complex64::zero())
        });
        for i in 0..16 {
            let row: Complex64 = m.row(i).iter().sum();
            assert!(row.norm() < 1e-12);
        }
        // psi = cos(tau): int_0^{2pi} [L- + L+] cos tau dtau = -4 pi cos t
        let psi: Vec<Complex64> = g.t.iter().map(|t| Complex64::new(t.cos(), 0.0)).collect();
        let v = m.mul_vec(&psi);
        for (i, t) in g.t.iter().enumerate() {
            let want = -1.0 / (8.0 * PI) * (-4.0 * PI * t.cos());
            assert!((v[i].re - want).abs() < 1e-10 && v[i].im.abs() < 1e-15);
        }
    }

    #[test]
    fn zero_density_has_zero_fields() {
        let mut sol = solve_density(&examples::wavy_crack(), 16, 1.0, Point2::new(1.0, 0.0)).unwrap();
        sol.psi.iter_mut().for_each(|p| *p = Complex64::zero());
        let ff = sol.far_field(&observation_directions(8));
        assert!(ff.values.iter().all(|v| v.norm() == 0.0));
        let f = sol.field_at(&[Point2::new(3.0, 3.0)]);
        assert_eq!(f[0].scattered, Complex64::zero());
    }

    #[test]
    fn density_is_linear_in_incident_amplitude() {
        let sol = solve_density(&examples::wavy_crack(), 32, 3.0, Point2::new(1.0, 0.0)).unwrap();
        let rhs: Vec<Complex64> = sol.grids[0].points.iter().map(|&x| -incident(3.0, sol.d, x) * 2.0).collect();
        let doubled = sol.solve_again(&rhs);
        for (a, b) in doubled.iter().zip(&sol.psi) {
            assert!((a - b * 2.0).norm() < 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn noise_has_exact_relative_level_and_is_seeded() {
        let ff = synthesize(&examples::wavy_crack(), 32, 3.0, Point2::new(1.0, 0.0), &observation_directions(32)).unwrap();
        assert_eq!(ff.add_noise(0.0, 1).unwrap().values, ff.values);
        let a = ff.add_noise(0.05, 11).unwrap();
        assert!((relative_error(&a.values, &ff.values) - 0.05).abs() < 1e-14);
        assert_eq!(a, ff.add_noise(0.05, 11).unwrap());
        assert_ne!(a.values, ff.add_noise(0.05, 12).unwrap().values);
    }

    #[test]
    fn rejects_nonpositive_wavenumber() {
        assert!(matches!(
            solve_density(&examples::wavy_crack(), 16, 0.0, Point2::new(1.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }
}

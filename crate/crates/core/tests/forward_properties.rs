use std::f64::consts::PI;

use arcscat_core::forward::{
    observation_directions, relative_error, solve_density, synthesize, FarFieldSet,
};
use arcscat_core::geometry::{examples, Crack, CrackSet, NystromGrid, Point2, TrigCrack, TrigTerm};
use num_complex::Complex64;

fn e1() -> Point2 {
    Point2::new(1.0, 0.0)
}

/// Adaptive Simpson on `[a, b]`; independent of the Nystrom nodes.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

#[test]
fn length_matches_adaptive_quadrature() {
    let set = examples::wavy_crack();
    let crack = set.cracks[0].clone();
    let oracle = adaptive_simpson(&|s| crack.point_and_derivative(s).1.norm(), -1.0, 1.0, 1e-13);
    let got = set.total_length(256).unwrap();
    assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");

    // The midpoint rule on arc weights converges to the same length.
    let errs: Vec<f64> = [16, 32, 64, 128]
        .iter()
        .map(|&n| (NystromGrid::build(&crack, n).unwrap().midpoint_length() - oracle).abs())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn far_field_self_convergence() {
    let dirs = observation_directions(32);
    let a = examples::three_cracks();
    let rel = relative_error(
        &synthesize(&a, 64, 3.0, e1(), &dirs).unwrap().values,
        &synthesize(&a, 128, 3.0, e1(), &dirs).unwrap().values,
    );
    assert!(rel <= 1e-6, "three cracks, n=64 vs 128: {rel:e}");
    let b = examples::wavy_crack();
    let rel = relative_error(
        &synthesize(&b, 96, 3.0, e1(), &dirs).unwrap().values,
        &synthesize(&b, 128, 3.0, e1(), &dirs).unwrap().values,
    );
    assert!(rel <= 1e-6, "wavy crack, n=96 vs 128: {rel:e}");
}

#[test]
fn spectral_convergence_against_reference() {
    let set = examples::wavy_crack();
    let dirs = observation_directions(32);
    let reference = synthesize(&set, 256, 3.0, e1(), &dirs).unwrap();
    let errs: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| relative_error(&synthesize(&set, n, 3.0, e1(), &dirs).unwrap().values, &reference.values))
        .collect();
    // the observed algebraic order grows with n
    let order1 = (errs[0] / errs[1]).log2();
    let order2 = (errs[1] / errs[2]).log2();
    assert!(order2 > order1 && order2 > 8.0, "{errs:?}");
}

#[test]
fn boundary_condition_off_nodes() {
    let set = examples::wavy_crack();
    let sol = solve_density(&set, 64, 3.0, e1()).unwrap();
    let n = 64;
    let mut worst: f64 = 0.0;
    for j in 0..n {
        // midway between collocation nodes
        let t = (j as f64 + 1.0) * PI / n as f64;
        if t >= PI {
            continue;
        }
        let (p, dp) = set.cracks[0].point_and_derivative(t.cos());
        worst = worst.max(sol.boundary_total_field(0, t, p, dp).norm());
    }
    assert!(worst <= 1e-4, "max |u| on crack = {worst:e}");
}

#[test]
fn reciprocity() {
    let set = examples::three_cracks();
    let n = 64;
    let k = 3.0;
    let pairs = [(0.3_f64, 2.0_f64), (1.1, -0.4), (PI, 0.5)];
    for &(a, b) in &pairs {
        let d = Point2::new(a.cos(), a.sin());
        let xh = Point2::new(b.cos(), b.sin());
        let lhs = solve_density(&set, n, k, d).unwrap().far_field(&[xh]).values[0];
        let rhs = solve_density(&set, n, k, -xh).unwrap().far_field(&[-d]).values[0];
        assert!((lhs - rhs).norm() <= 1e-6 * lhs.norm().max(1e-3), "{lhs} vs {rhs}");
    }
}

#[test]
fn mirror_symmetry() {
    // With d = (1, 0), reflecting the crack across the x-axis reflects its
    // far field: u_mirror(x, -y) = u(x, y).
    let up: Crack = TrigCrack { ax0: 0.0, ax1: 1.0, terms: vec![TrigTerm::sin(1, 0.2)] }.into();
    let down: Crack = TrigCrack { ax0: 0.0, ax1: 1.0, terms: vec![TrigTerm::sin(1, -0.2)] }.into();
    let dirs = observation_directions(32);
    let refl: Vec<Point2> = dirs.iter().map(|p| Point2::new(p.x, -p.y)).collect();
    let a = synthesize(&CrackSet::new(vec![up], 0.1), 64, 3.0, e1(), &dirs).unwrap();
    let b = synthesize(&CrackSet::new(vec![down], 0.1), 64, 3.0, e1(), &refl).unwrap();
    assert!(relative_error(&b.values, &a.values) < 1e-6);

    // a crack symmetric about the x-axis itself (a flat segment) has a symmetric far field
    let flat = CrackSet::new(vec![TrigCrack { ax0: 0.0, ax1: 1.0, terms: vec![] }.into()], 0.1);
    let f = synthesize(&flat, 64, 3.0, e1(), &dirs).unwrap();
    let g = synthesize(&flat, 64, 3.0, e1(), &refl).unwrap();
    assert!(relative_error(&g.values, &f.values) < 1e-6);
}

#[test]
fn far_field_matches_near_field_asymptotics() {
    let set = examples::wavy_crack();
    let k = 3.0;
    let sol = solve_density(&set, 64, k, e1()).unwrap();
    let dirs = observation_directions(8);
    let ff = sol.far_field(&dirs);
    let r = 1e3;
    let pts: Vec<Point2> = dirs.iter().map(|d| *d * r).collect();
    let near = sol.field_at(&pts);
    for (fv, u) in near.iter().zip(&ff.values) {
        let scaled = fv.scattered * r.sqrt() * Complex64::from_polar(1.0, -k * r);
        assert!((scaled - u).norm() <= 1e-3 * ff.norm(), "{scaled} vs {u}");
        assert!(!fv.near_boundary);
    }
}

#[test]
fn radiating_decay() {
    let set = examples::wavy_crack();
    let sol = solve_density(&set, 64, 3.0, e1()).unwrap();
    let dir = Point2::new(0.6, 0.8);
    let a = sol.field_at(&[dir * 1e2])[0].scattered.norm();
    let b = sol.field_at(&[dir * 1e4])[0].scattered.norm();
    // |u^s| ~ |x|^{-1/2}: ratio 10 over two decades
    assert!((a / b - 10.0).abs() < 0.1, "{}", a / b);
}

#[test]
fn relabeling_permutes_density_blocks() {
    let set = examples::three_cracks();
    let mut swapped = set.clone();
    swapped.cracks.swap(0, 2);
    let a = solve_density(&set, 32, 3.0, e1()).unwrap();
    let b = solve_density(&swapped, 32, 3.0, e1()).unwrap();
    for (x, y) in a.psi_block(0).iter().zip(b.psi_block(2)) {
        assert!((x - y).norm() < 1e-10);
    }
    let dirs = observation_directions(16);
    assert!(relative_error(&b.far_field(&dirs).values, &a.far_field(&dirs).values) < 1e-12);
}

#[test]
fn frequency_scaling_consistency() {
    // Scaling the geometry by alpha and k by 1/alpha keeps k * geometry fixed;
    // the far field scales by sqrt(alpha) through the 1/sqrt(k) prefactor.
    let set = examples::wavy_crack();
    let alpha = 2.0;
    let scaled = CrackSet::new(
        vec![TrigCrack {
            ax0: 0.0,
            ax1: alpha,
            terms: vec![
                TrigTerm::cos(2, 0.5 * alpha),
                TrigTerm::sin(2, 0.2 * alpha),
                TrigTerm::cos(6, -0.1 * alpha),
                TrigTerm::sin(10, 0.1 * alpha),
            ],
        }
        .into()],
        0.1,
    );
    let dirs = observation_directions(32);
    let a: FarFieldSet = synthesize(&set, 64, 3.0, e1(), &dirs).unwrap();
    let b = synthesize(&scaled, 64, 3.0 / alpha, e1(), &dirs).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((y.norm() - alpha.sqrt() * x.norm()).abs() < 1e-8);
    }
}

//! Parametric cracks `z(s)`, `s in [-1, 1]`, and their Nystrom grids.
//!
//! Two families are supported: trigonometric curves used to synthesize data,
//! and Chebyshev graphs `(d0 + d1 s, sum c_i T_i(s))` used for reconstruction.
//! The normal is the tangent rotated by `+pi/2`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Number of samples used for regularity and separation checks.
pub const CHECK_SAMPLES: usize = 512;
/// Samples stay this far inside the open parameter interval.
pub const CHECK_MARGIN: f64 = 1e-6;
/// Speeds below this are treated as a degenerate parametrization.
pub const MIN_SPEED: f64 = 1e-12;
/// Chebyshev cracks with `|d1|` below this have collapsed onto a vertical line.
pub const MIN_AXIS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Rotation by `+pi/2`.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, o: Point2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, a: f64) -> Point2 {
        Point2::new(self.x * a, self.y * a)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrigKind {
    Cos,
    Sin,
}

/// One term `coef * kind(m * (pi/2) * s)`. `Cos` with `m = 0` is a constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigTerm {
    pub kind: TrigKind,
    pub m: u32,
    pub coef: f64,
}

impl TrigTerm {
    pub const fn cos(m: u32, coef: f64) -> Self {
        TrigTerm { kind: TrigKind::Cos, m, coef }
    }

    pub const fn sin(m: u32, coef: f64) -> Self {
        TrigTerm { kind: TrigKind::Sin, m, coef }
    }
}

/// `x(s) = ax0 + ax1 s`, `y(s) = sum coef * kind(m pi s / 2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigCrack {
    pub ax0: f64,
    pub ax1: f64,
    pub terms: Vec<TrigTerm>,
}

impl TrigCrack {
    fn y(&self, s: f64) -> (f64, f64) {
        self.terms.iter().fold((0.0, 0.0), |(y, dy), t| {
            let w = f64::from(t.m) * FRAC_PI_2;
            let (sn, cs) = (w * s).sin_cos();
            match t.kind {
                TrigKind::Cos => (y + t.coef * cs, dy - t.coef * w * sn),
                TrigKind::Sin => (y + t.coef * sn, dy + t.coef * w * cs),
            }
        })
    }
}

/// `x(s) = d0 + d1 s`, `y(s) = sum_i c_i T_i(s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebCrack {
    pub d0: f64,
    pub d1: f64,
    pub c: Vec<f64>,
}

impl ChebCrack {
    pub fn new(d0: f64, d1: f64, c: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::Shape("Chebyshev crack needs at least one coefficient"));
        }
        Ok(ChebCrack { d0, d1, c })
    }

    /// Horizontal segment `(d0 + d1 s, y0)`.
    pub fn segment(d0: f64, d1: f64, y0: f64) -> Self {
        ChebCrack { d0, d1, c: alloc::vec![y0] }
    }

    /// Highest Chebyshev index `p`.
    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// Same curve with coefficients zero-padded to order `p`.
    pub fn padded(&self, p: usize) -> Self {
        let mut c = self.c.clone();
        if c.len() < p + 1 {
            c.resize(p + 1, 0.0);
        }
        ChebCrack { d0: self.d0, d1: self.d1, c }
    }

    fn y(&self, s: f64) -> (f64, f64) {
        let mut y = 0.0;
        let mut dy = 0.0;
        chebyshev_each(s, self.c.len(), |i, t, dt| {
            y += self.c[i] * t;
            dy += self.c[i] * dt;
        });
        (y, dy)
    }
}

/// Calls `f(i, T_i(s), T_i'(s))` for `i < count` by the three-term recurrence.
pub fn chebyshev_each(s: f64, count: usize, mut f: impl FnMut(usize, f64, f64)) {
    let (mut t0, mut t1) = (1.0, s);
    let (mut d0, mut d1) = (0.0, 1.0);
    for i in 0..count {
        match i {
            0 => f(0, 1.0, 0.0),
            1 => f(1, s, 1.0),
            _ => {
                let t2 = 2.0 * s * t1 - t0;
                let d2 = 2.0 * t1 + 2.0 * s * d1 - d0;
                f(i, t2, d2);
                t0 = t1;
                t1 = t2;
                d0 = d1;
                d1 = d2;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Crack {
    Trig(TrigCrack),
    Cheb(ChebCrack),
}

impl From<TrigCrack> for Crack {
    fn from(c: TrigCrack) -> Self {
        Crack::Trig(c)
    }
}

impl From<ChebCrack> for Crack {
    fn from(c: ChebCrack) -> Self {
        Crack::Cheb(c)
    }
}

impl Crack {
    /// `z(s)` and `z'(s)` without domain checks.
    pub fn point_and_derivative(&self, s: f64) -> (Point2, Point2) {
        let (x, dx, (y, dy)) = match self {
            Crack::Trig(c) => (c.ax0 + c.ax1 * s, c.ax1, c.y(s)),
            Crack::Cheb(c) => (c.d0 + c.d1 * s, c.d1, c.y(s)),
        };
        (Point2::new(x, y), Point2::new(dx, dy))
    }

    pub fn eval(&self, s: f64) -> Result<Point2> {
        check_param(s)?;
        Ok(self.point_and_derivative(s).0)
    }

    /// Unit tangent and unit normal (tangent rotated by `+pi/2`).
    pub fn tangent_normal(&self, s: f64) -> Result<(Point2, Point2)> {
        check_param(s)?;
        let dz = self.point_and_derivative(s).1;
        let speed = dz.norm();
        if speed < MIN_SPEED {
            return Err(Error::DegenerateCurve { crack: 0, s, speed });
        }
        let t = dz * (1.0 / speed);
        Ok((t, t.perp()))
    }

    /// Horizontal slope `x'(s)`, constant for both families.
    pub fn axis_slope(&self) -> f64 {
        match self {
            Crack::Trig(c) => c.ax1,
            Crack::Cheb(c) => c.d1,
        }
    }

    fn samples(&self) -> Vec<Point2> {
        (0..CHECK_SAMPLES).map(|i| self.point_and_derivative(check_param_at(i)).0).collect()
    }
}

fn check_param(s: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::Domain("curve parameter outside [-1, 1]"))
    }
}

fn check_param_at(i: usize) -> f64 {
    let lo = -1.0 + CHECK_MARGIN;
    lo + (2.0 - 2.0 * CHECK_MARGIN) * i as f64 / (CHECK_SAMPLES - 1) as f64
}

/// Collocation nodes, curve samples and arc weights for one crack.
#[derive(Clone, Debug, PartialEq)]
pub struct NystromGrid {
    pub n: usize,
    /// `t_j = (2j - 1) pi / (2n)`.
    pub t: Vec<f64>,
    /// `s_j = cos t_j`.
    pub s: Vec<f64>,
    pub points: Vec<Point2>,
    /// `z'(s_j)`.
    pub dz: Vec<Point2>,
    /// `|z'(s_j)| sin t_j`.
    pub arcw: Vec<f64>,
}

impl NystromGrid {
    pub fn build(crack: &Crack, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("a Nystrom grid needs n >= 2"));
        }
        let t: Vec<f64> = (1..=n).map(|j| crate::numerics::quadrature::shifted_node(n, j)).collect();
        let s: Vec<f64> = t.iter().map(|t| t.cos()).collect();
        let (points, dz): (Vec<_>, Vec<_>) = s.iter().map(|&s| crack.point_and_derivative(s)).unzip();
        let grid = NystromGrid { n, t, s, points, dz, arcw: Vec::new() };
        Ok(grid.with_weights())
    }

    fn with_weights(mut self) -> Self {
        self.arcw = self.dz.iter().zip(&self.t).map(|(d, t)| d.norm() * t.sin()).collect();
        self
    }

    /// Grid of the displaced crack `z + eps h`, given `h` and `h'` at the nodes.
    pub fn perturbed(&self, h: &[Point2], dh: &[Point2], eps: f64) -> Self {
        let points = self.points.iter().zip(h).map(|(p, h)| *p + *h * eps).collect();
        let dz = self.dz.iter().zip(dh).map(|(d, h)| *d + *h * eps).collect();
        NystromGrid { n: self.n, t: self.t.clone(), s: self.s.clone(), points, dz, arcw: Vec::new() }
            .with_weights()
    }

    /// `(pi/n) sum_j m_j`: the midpoint rule for `int_0^pi |z'(cos t)| sin t dt`.
    ///
    /// This is the length that makes the discrete mean-value operators
    /// consistent. It converges only like `n^-2` because `sin t` is not smooth
    /// under even periodic extension; use [`length`](Self::length) for the
    /// geometric length.
    pub fn midpoint_length(&self) -> f64 {
        PI / self.n as f64 * self.arcw.iter().sum::<f64>()
    }

    /// Arc length `int_{-1}^{1} |z'(s)| ds` by Fejer's first rule on the
    /// grid nodes `s_j = cos t_j` (spectrally accurate for analytic cracks).
    pub fn length(&self) -> f64 {
        self.dz.iter().zip(fejer_weights(self.n)).map(|(d, w)| d.norm() * w).sum()
    }
}

/// Fejer weights `w_j = (2/n) [1 - 2 sum_{m=1}^{n/2} cos(2 m t_j) / (4m^2 - 1)]`.
pub fn fejer_weights(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |j| {
        let t = crate::numerics::quadrature::shifted_node(n, j);
        let mut acc = 1.0;
        for m in 1..=n / 2 {
            let mf = m as f64;
            acc -= 2.0 * (2.0 * mf * t).cos() / (4.0 * mf * mf - 1.0);
        }
        2.0 / n as f64 * acc
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Separation { first: usize, second: usize, distance: f64 },
    Degenerate { crack: usize, s: f64, speed: f64 },
    DegenerateAxis { crack: usize },
    AxisFlip { crack: usize },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A collection of disjoint cracks with a required pairwise separation.
#[derive(Clone, Debug, PartialEq)]
pub struct CrackSet {
    pub cracks: Vec<Crack>,
    pub d_min: f64,
}

impl CrackSet {
    pub fn new(cracks: Vec<Crack>, d_min: f64) -> Self {
        CrackSet { cracks, d_min }
    }

    pub fn len(&self) -> usize {
        self.cracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cracks.is_empty()
    }

    pub fn grids(&self, n: usize) -> Result<Vec<NystromGrid>> {
        self.cracks.iter().map(|c| NystromGrid::build(c, n)).collect()
    }

    pub fn total_length(&self, n: usize) -> Result<f64> {
        Ok(self.grids(n)?.iter().map(NystromGrid::length).sum())
    }

    /// Minimum sampled distance between cracks `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        sampled_distance(&self.cracks[i].samples(), &self.cracks[j].samples())
    }

    pub fn validity_check(&self) -> ValidityReport {
        self.validity_check_against(None)
    }

    /// Validity report; when `reference` is given, a sign change of any
    /// horizontal slope relative to it is also reported.
    pub fn validity_check_against(&self, reference: Option<&CrackSet>) -> ValidityReport {
        let mut violations = Vec::new();
        let samples: Vec<Vec<Point2>> = self.cracks.iter().map(Crack::samples).collect();
        for (k, crack) in self.cracks.iter().enumerate() {
            if let Crack::Cheb(c) = crack {
                if !(c.d1.abs() >= MIN_AXIS) {
                    violations.push(Violation::DegenerateAxis { crack: k });
                    continue;
                }
            }
            for i in 0..CHECK_SAMPLES {
                let s = check_param_at(i);
                let speed = crack.point_and_derivative(s).1.norm();
                if !(speed >= MIN_SPEED) {
                    violations.push(Violation::Degenerate { crack: k, s, speed });
                    break;
                }
            }
            if let Some(r) = reference.and_then(|r| r.cracks.get(k)) {
                if r.axis_slope().signum() != crack.axis_slope().signum() {
                    violations.push(Violation::AxisFlip { crack: k });
                }
            }
        }
        for i in 0..samples.len() {
            for j in i + 1..samples.len() {
                let distance = sampled_distance(&samples[i], &samples[j]);
                if !(distance >= self.d_min) {
                    violations.push(Violation::Separation { first: i, second: j, distance });
                }
            }
        }
        ValidityReport { violations }
    }

    /// Error form of [`validity_check`](Self::validity_check) for solver entry points.
    pub fn ensure_valid(&self) -> Result<()> {
        match self.validity_check().violations.first() {
            None => Ok(()),
            Some(Violation::Separation { first, second, distance }) => Err(Error::Separation {
                first: *first,
                second: *second,
                distance: *distance,
                required: self.d_min,
            }),
            Some(Violation::Degenerate { crack, s, speed }) => {
                Err(Error::DegenerateCurve { crack: *crack, s: *s, speed: *speed })
            }
            Some(Violation::DegenerateAxis { crack }) | Some(Violation::AxisFlip { crack }) => {
                Err(Error::DegenerateCurve { crack: *crack, s: 0.0, speed: 0.0 })
            }
        }
    }
}

fn sampled_distance(a: &[Point2], b: &[Point2]) -> f64 {
    let mut best = f64::INFINITY;
    for p in a {
        for q in b {
            let d = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
            if d < best {
                best = d;
            }
        }
    }
    best.sqrt()
}

/// Cracks of the three-crack benchmark: two small arcs below a wider one.
pub mod examples {
    use super::*;
    use alloc::vec;

    pub fn three_cracks() -> CrackSet {
        CrackSet::new(
            vec![
                TrigCrack {
                    ax0: 1.0,
                    ax1: 0.5,
                    terms: vec![TrigTerm::cos(1, 0.5), TrigTerm::sin(1, 0.2), TrigTerm::cos(3, -0.1)],
                }
                .into(),
                TrigCrack {
                    ax0: -1.0,
                    ax1: 0.5,
                    terms: vec![TrigTerm::cos(0, -1.0), TrigTerm::sin(1, -0.4), TrigTerm::cos(3, 0.1)],
                }
                .into(),
                TrigCrack { ax0: 0.0, ax1: 1.0, terms: vec![TrigTerm::cos(0, 3.0), TrigTerm::cos(1, 0.3), TrigTerm::sin(1, 0.2)] }
                    .into(),
            ],
            0.1,
        )
    }

    /// Flat initial guesses shifted horizontally from [`three_cracks`].
    pub fn three_cracks_initial() -> Vec<ChebCrack> {
        vec![ChebCrack::segment(1.5, 0.5, 0.0), ChebCrack::segment(-1.5, 0.5, -1.0), ChebCrack::segment(0.0, 1.0, 3.0)]
    }

    /// Single oscillating crack spanning three wavelengths at `k = 9`.
    pub fn wavy_crack() -> CrackSet {
        CrackSet::new(
            vec![TrigCrack {
                ax0: 0.0,
                ax1: 1.0,
                terms: vec![TrigTerm::cos(2, 0.5), TrigTerm::sin(2, 0.2), TrigTerm::cos(6, -0.1), TrigTerm::sin(10, 0.1)],
            }
            .into()],
            0.1,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: Point2, b: Point2, tol: f64) -> bool {
        a.dist(b) < tol
    }

    #[test]
    fn evaluates_reference_points() {
        let b = &examples::wavy_crack().cracks[0];
        assert!(close(b.eval(0.0).unwrap(), Point2::new(0.0, 0.4), 1e-15));
        let cheb = Crack::from(ChebCrack::new(0.0, 1.0, vec![0.0, 0.0, 1.0]).unwrap());
        assert!(close(cheb.eval(0.5).unwrap(), Point2::new(0.5, -0.5), 1e-15));
        let g2 = &examples::three_cracks().cracks[1];
        assert!(close(g2.eval(0.0).unwrap(), Point2::new(-1.0, -0.9), 1e-15));
    }

    #[test]
    fn rejects_parameter_outside_interval() {
        let c = Crack::from(ChebCrack::segment(0.0, 1.0, 0.0));
        assert!(matches!(c.eval(1.0 + 1e-12), Err(Error::Domain(_))));
        assert!(c.eval(-1.0).is_ok());
    }

    #[test]
    fn tangent_and_normal_conventions() {
        let seg = Crack::from(ChebCrack::segment(1.5, 0.5, 0.0));
        for &s in &[-0.9, 0.0, 0.7] {
            let (_, n) = seg.tangent_normal(s).unwrap();
            assert!(close(n, Point2::new(0.0, 1.0), 1e-15));
        }
        let back = Crack::from(ChebCrack::new(0.0, -2.0, vec![0.1, 0.3]).unwrap());
        assert!(back.tangent_normal(0.2).unwrap().0.x < 0.0);
        let b = &examples::wavy_crack().cracks[0];
        let (t, _) = b.tangent_normal(0.0).unwrap();
        let slope = 0.7 * PI;
        assert!(close(t, Point2::new(1.0, slope) * (1.0 / (1.0 + slope * slope).sqrt()), 1e-14));
    }

    #[test]
    fn degenerate_tangent_is_error() {
        let dot = Crack::from(TrigCrack { ax0: 0.0, ax1: 0.0, terms: vec![TrigTerm::cos(0, 1.0)] });
        assert!(matches!(dot.tangent_normal(0.0), Err(Error::DegenerateCurve { .. })));
    }

    #[test]
    fn grid_nodes_and_weights() {
        let seg = Crack::from(ChebCrack::segment(3.0, 0.5, 0.0));
        let g = NystromGrid::build(&seg, 2).unwrap();
        assert!((g.t[0] - PI / 4.0).abs() < 1e-15 && (g.t[1] - 3.0 * PI / 4.0).abs() < 1e-15);
        let g = NystromGrid::build(&seg, 4).unwrap();
        for (m, t) in g.arcw.iter().zip(&g.t) {
            assert!((m - 0.5 * t.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn lengths_of_segments() {
        let one = CrackSet::new(vec![ChebCrack::segment(1.5, 0.5, 0.0).into()], 0.1);
        assert!((one.total_length(32).unwrap() - 1.0).abs() < 1e-10);
        let two = CrackSet::new(
            vec![ChebCrack::segment(1.5, 0.5, 0.0).into(), ChebCrack::segment(-1.5, 0.5, 0.0).into()],
            0.1,
        );
        assert!((two.total_length(32).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn validity_reports() {
        assert!(examples::three_cracks().validity_check().is_ok());
        let c: Crack = ChebCrack::segment(0.0, 1.0, 0.0).into();
        let twins = CrackSet::new(vec![c.clone(), c], 0.1);
        assert!(matches!(twins.validity_check().violations[0], Violation::Separation { .. }));
        let flat = CrackSet::new(vec![ChebCrack::segment(0.0, 0.0, 0.0).into()], 0.1);
        assert_eq!(flat.validity_check().violations, vec![Violation::DegenerateAxis { crack: 0 }]);
        let nearly = CrackSet::new(vec![ChebCrack::new(0.0, 5.6e-17, vec![0.0, 0.1]).unwrap().into()], 0.1);
        assert_eq!(nearly.validity_check().violations, vec![Violation::DegenerateAxis { crack: 0 }]);
        let flipped = CrackSet::new(vec![ChebCrack::segment(0.0, -1.0, 0.0).into()], 0.1);
        let reference = CrackSet::new(vec![ChebCrack::segment(0.0, 1.0, 0.0).into()], 0.1);
        assert_eq!(
            flipped.validity_check_against(Some(&reference)).violations,
            vec![Violation::AxisFlip { crack: 0 }]
        );
    }

    #[test]
    fn grid_avoids_endpoints() {
        let g = NystromGrid::build(&Crack::from(ChebCrack::segment(0.0, 1.0, 0.0)), 16).unwrap();
        let gap = PI / 32.0;
        assert!((g.t[0] - gap).abs() < 1e-15 && (PI - g.t[15] - gap).abs() < 1e-14);
        assert!(g.t.windows(2).all(|w| w[0] < w[1]));
    }
}

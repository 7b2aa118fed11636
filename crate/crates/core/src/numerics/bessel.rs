//! Bessel functions of order zero and one for real positive arguments.
//!
//! Ascending series up to `SERIES_CUTOFF`, Hankel asymptotic expansions
//! beyond. Both branches stay below `1e-10` absolute error on `(0, 1e3]`.
//!
//! The series branch also yields the log-free remainders
//! `G(z) = (i/4) H0(z) + J0(z) ln(z) / (2 pi)` and
//! `G1(z) = (i/4) H1(z) + J1(z) ln(z) / (2 pi) - 1 / (2 pi z)`
//! without forming the logarithm, so they stay accurate as `z -> 0`.

use core::f64::consts::{FRAC_PI_4, LN_2, PI};

use num_complex::Complex64;
use super::EULER_GAMMA;
use crate::error::{Error, Result};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

const SERIES_CUTOFF: f64 = 12.0;

/// `J0, J1, Y0, Y1` at one argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselJY {
    pub j0: f64,
    pub j1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl BesselJY {
    pub fn h0(&self) -> Complex64 {
        Complex64::new(self.j0, self.y0)
    }

    pub fn h1(&self) -> Complex64 {
        Complex64::new(self.j1, self.y1)
    }
}

/// Everything the split Nystrom kernels need at one argument `z = k r`.
#[derive(Clone, Copy, Debug)]
pub struct KernelParts {
    pub j0: f64,
    pub j1: f64,
    /// `(i/4) H0(z) + J0(z) ln z / (2 pi)`.
    pub g: Complex64,
    /// `(i/4) H1(z) + J1(z) ln z / (2 pi) - 1/(2 pi z)`.
    pub g1: Complex64,
}

/// Bessel functions `J0, J1, Y0, Y1` at `x > 0`.
///
/// `x = 0` is accepted only through [`bessel_j`]; the Y functions are
/// singular there.
pub fn bessel(x: f64) -> Result<BesselJY> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain("Bessel Y functions need a finite argument x > 0"));
    }
    if x <= SERIES_CUTOFF {
        let s = Series::new(x);
        let log_term = (x / 2.0).ln() + EULER_GAMMA;
        Ok(BesselJY {
            j0: s.j0,
            j1: s.j1,
            y0: 2.0 / PI * (log_term * s.j0 - s.harm0),
            y1: 2.0 / PI * log_term * s.j1 - 2.0 / (PI * x) - s.harm1 / PI,
        })
    } else {
        let h0 = hankel_asymptotic(0, x);
        let h1 = hankel_asymptotic(1, x);
        Ok(BesselJY { j0: h0.re, j1: h1.re, y0: h0.im, y1: h1.im })
    }
}

/// `J0(x)` and `J1(x)` for `x >= 0`.
pub fn bessel_j(x: f64) -> (f64, f64) {
    let x = x.abs();
    if x <= SERIES_CUTOFF {
        let s = Series::new(x);
        (s.j0, s.j1)
    } else {
        (hankel_asymptotic(0, x).re, hankel_asymptotic(1, x).re)
    }
}

/// `H0^(1)(x)` for `x > 0`.
pub fn hankel1_0(x: f64) -> Complex64 {
    debug_assert!(x > 0.0);
    if x <= SERIES_CUTOFF {
        let s = Series::new(x);
        let log_term = (x / 2.0).ln() + EULER_GAMMA;
        Complex64::new(s.j0, 2.0 / PI * (log_term * s.j0 - s.harm0))
    } else {
        hankel_asymptotic(0, x)
    }
}

/// `H1^(1)(x)` for `x > 0`.
pub fn hankel1_1(x: f64) -> Complex64 {
    debug_assert!(x > 0.0);
    if x <= SERIES_CUTOFF {
        let s = Series::new(x);
        let log_term = (x / 2.0).ln() + EULER_GAMMA;
        Complex64::new(s.j1, 2.0 / PI * log_term * s.j1 - 2.0 / (PI * x) - s.harm1 / PI)
    } else {
        hankel_asymptotic(1, x)
    }
}

/// Kernel-splitting values at `z >= 0`. At `z = 0` the remainders take their
/// limits `G(0) = C` and `G1(0) = 0`.
pub fn kernel_parts(z: f64) -> KernelParts {
    debug_assert!(z >= 0.0);
    if z <= SERIES_CUTOFF {
        let s = Series::new(z);
        let c0 = (LN_2 - EULER_GAMMA) / (2.0 * PI);
        KernelParts {
            j0: s.j0,
            j1: s.j1,
            g: Complex64::new(c0 * s.j0 + s.harm0 / (2.0 * PI), 0.25 * s.j0),
            g1: Complex64::new(c0 * s.j1 + s.harm1 / (4.0 * PI), 0.25 * s.j1),
        }
    } else {
        let h0 = hankel_asymptotic(0, z);
        let h1 = hankel_asymptotic(1, z);
        let i4 = Complex64::new(0.0, 0.25);
        let lnz = z.ln() / (2.0 * PI);
        KernelParts {
            j0: h0.re,
            j1: h1.re,
            g: i4 * h0 + h0.re * lnz,
            g1: i4 * h1 + h1.re * lnz - 1.0 / (2.0 * PI * z),
        }
    }
}

/// Partial sums of the ascending series.
///
/// `harm0 = sum_{m>=1} H_m (-x^2/4)^m / (m!)^2` and
/// `harm1 = sum_{m>=0} (H_m + H_{m+1}) (-x^2/4)^m (x/2) / (m! (m+1)!)`,
/// with `H_m` the harmonic numbers.
struct Series {
    j0: f64,
    j1: f64,
    harm0: f64,
    harm1: f64,
}

impl Series {
    fn new(x: f64) -> Self {
        let q = -0.25 * x * x;
        let mut t0 = 1.0;
        let mut t1 = 0.5 * x;
        let mut j0 = t0;
        let mut j1 = t1;
        let mut harm0 = 0.0;
        let mut harm1 = t1; // H_0 + H_1 = 1
        let mut h = 0.0;
        let mut m = 0.0;
        loop {
            m += 1.0;
            h += 1.0 / m;
            let h_next = h + 1.0 / (m + 1.0);
            t0 *= q / (m * m);
            t1 *= q / (m * (m + 1.0));
            j0 += t0;
            j1 += t1;
            harm0 += h * t0;
            harm1 += (h + h_next) * t1;
            if m > x && t0.abs() < 1e-18 && t1.abs() < 1e-18 {
                break;
            }
        }
        Series { j0, j1, harm0, harm1 }
    }
}

/// Hankel expansion `H_nu(x) ~ sqrt(2/(pi x)) e^{i w} sum_k i^k a_k(nu) / x^k`,
/// truncated at the smallest term.
fn hankel_asymptotic(nu: u32, x: f64) -> Complex64 {
    let mu = 4.0 * f64::from(nu * nu);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = 1.0;
    for k in 1..200 {
        let kf = f64::from(k);
        let odd = 2.0 * kf - 1.0;
        term = term * Complex64::new(0.0, (mu - odd * odd) / (kf * 8.0 * x));
        let mag = term.norm();
        if mag >= last {
            break;
        }
        sum += term;
        last = mag;
        if mag < 1e-17 {
            break;
        }
    }
    let phase = x - f64::from(nu) * core::f64::consts::FRAC_PI_2 - FRAC_PI_4;
    let amp = (2.0 / (PI * x)).sqrt();
    Complex64::new(phase.cos(), phase.sin()) * sum * amp
}

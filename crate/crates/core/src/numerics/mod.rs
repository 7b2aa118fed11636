//! Special functions, quadrature weights and small dense linear algebra.
//!
//! Everything here is self-contained so the solver runs without a system
//! BLAS/LAPACK and without `std`.

pub mod bessel;
pub mod linalg;
pub mod quadrature;

use core::f64::consts::{LN_2, PI};
use num_complex::Complex64;

pub use bessel::{bessel, hankel1_0, hankel1_1, kernel_parts, BesselJY, KernelParts};
pub use linalg::{tikhonov_lstsq, ComplexLu, Matrix};
pub use quadrature::{log_quad_weights, LogWeightTable};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Regular part of the two-dimensional Helmholtz fundamental solution at the
/// origin: `(i/4) H0(kr) + ln(kr)/(2 pi) -> C` as `kr -> 0`.
pub fn log_remainder_constant() -> Complex64 {
    Complex64::new(LN_2 / (2.0 * PI) - EULER_GAMMA / (2.0 * PI), 0.25)
}

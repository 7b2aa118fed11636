//! Trigonometric quadrature for the periodic logarithmic kernel
//! `ln(4 sin^2((t - tau)/2))` on the shifted grid
//! `tau_j = (2j - 1) pi / (2n)`, `j = 1..2n`.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Node `tau_j` of the shifted `2n`-point periodic grid (`j` is 1-based).
pub fn shifted_node(n: usize, j: usize) -> f64 {
    (2 * j - 1) as f64 * PI / (2 * n) as f64
}

/// Weights `R_j(t)`, `j = 1..2n`, such that
/// `int_0^{2pi} ln(4 sin^2((t - tau)/2)) f(tau) dtau ~ sum_j R_j(t) f(tau_j)`,
/// exact for trigonometric polynomials of degree `< n`.
pub fn log_quad_weights(n: usize, t: f64) -> Vec<f64> {
    assert!(n >= 2, "log quadrature needs n >= 2");
    (1..=2 * n).map(|j| log_weight(n, t - shifted_node(n, j))).collect()
}

fn log_weight(n: usize, diff: f64) -> f64 {
    let nf = n as f64;
    let mut acc = (nf * diff).cos() / nf;
    for m in 1..n {
        let mf = m as f64;
        acc += 2.0 / mf * (mf * diff).cos();
    }
    -PI / nf * acc
}

/// Precomputed log weights at the collocation nodes.
///
/// On the uniform grid `R_j(t_i)` depends only on `(i - j) mod 2n`, so one
/// vector of length `2n` covers every collocation point and its mirror
/// `2 pi - t_i`.
#[derive(Clone, Debug)]
pub struct LogWeightTable {
    n: usize,
    circulant: Vec<f64>,
}

impl LogWeightTable {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "log quadrature needs n >= 2");
        let circulant = (0..2 * n).map(|q| log_weight(n, q as f64 * PI / n as f64)).collect();
        LogWeightTable { n, circulant }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `R_j(t_i) + R_j(2 pi - t_i)` for collocation index `i in 0..n` and
    /// extended node index `j in 0..2n` (both 0-based).
    #[inline]
    pub fn folded(&self, i: usize, j: usize) -> f64 {
        let m = 2 * self.n;
        let direct = (i + m - j) % m;
        // 2 pi - t_i is node 2n - 1 - i (0-based)
        let mirror = (2 * m - 1 - i - j) % m;
        self.circulant[direct] + self.circulant[mirror]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_integrate_to_zero() {
        let n = 16;
        let w = log_quad_weights(n, shifted_node(n, 1));
        assert!(w.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn cosine_family_is_exact() {
        // int_0^{2pi} ln(4 sin^2((t - tau)/2)) cos(m tau) dtau = -(2 pi / m) cos(m t)
        let n = 16;
        for &t in &[1.0, 0.3, 4.2] {
            let w = log_quad_weights(n, t);
            for m in 1..n {
                let mf = m as f64;
                let got: f64 =
                    w.iter().enumerate().map(|(j, wj)| wj * (mf * shifted_node(n, j + 1)).cos()).sum();
                let want = -2.0 * PI / mf * (mf * t).cos();
                assert!((got - want).abs() < 1e-12, "m = {m}, t = {t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn table_matches_direct_weights() {
        let n = 8;
        let table = LogWeightTable::new(n);
        for i in 0..n {
            let t = shifted_node(n, i + 1);
            let direct = log_quad_weights(n, t);
            let mirror = log_quad_weights(n, 2.0 * PI - t);
            for j in 0..2 * n {
                assert!((table.folded(i, j) - direct[j] - mirror[j]).abs() < 1e-13);
            }
        }
    }
}

//! Regularized maximum.
//!
//! `reg_max(a_1, .., a_m) = E[max_i (a_i + Y_i)]` where the `Y_i` are
//! independent with density `theta_s(y) = theta(y / 2s) / 2s` and
//! `theta(r) = (1 - 4r^2)^4 / P(1)` on `[-1/2, 1/2]`, with
//! `P(v) = v - 4v^3/3 + 6v^5/5 - 4v^7/7 + v^9/9` so that `theta` has unit mass.
//! The result lies in `[max, max + s]` and equals `max` once the largest input
//! leads the others by `2s`.
//!
//! Writing `Theta` for the CDF,
//! `reg_max = U - int_L^U prod_i Theta_s(y - a_i) dy` with `U = max + s`,
//! `L = max - s`. The integrand is a piecewise polynomial of degree at most
//! 27 with breaks at `a_i +- s`, so 16-point Gauss-Legendre on each piece is
//! exact up to roundoff.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::field::Field;

pub const DEFAULT_SPREAD: f64 = 0.5;

const P1: f64 = 128.0 / 315.0;

fn antiderivative(v: f64) -> f64 {
    let v2 = v * v;
    v * (1.0 + v2 * (-4.0 / 3.0 + v2 * (6.0 / 5.0 + v2 * (-4.0 / 7.0 + v2 / 9.0))))
}

/// Kernel density on `[-1/2, 1/2]`.
pub fn kernel(r: f64) -> f64 {
    if r.abs() >= 0.5 {
        return 0.0;
    }
    let q = 1.0 - 4.0 * r * r;
    let q2 = q * q;
    q2 * q2 / P1
}

/// CDF of [`kernel`].
pub fn kernel_cdf(r: f64) -> f64 {
    if r <= -0.5 {
        0.0
    } else if r >= 0.5 {
        1.0
    } else {
        (antiderivative(2.0 * r) + P1) / (2.0 * P1)
    }
}

const GL_POINTS: usize = 16;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton on `P_16`.
fn gauss_legendre() -> &'static [(f64, f64); GL_POINTS] {
    static RULE: OnceLock<[(f64, f64); GL_POINTS]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut rule = [(0.0, 0.0); GL_POINTS];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

/// Regularized maximum of a list of reals with kernel half-width `spread`.
pub fn reg_max_scalar(values: &[f64], spread: f64) -> f64 {
    debug_assert!(!values.is_empty() && spread > 0.0);
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = 2.0 * spread;
    // Inputs at least `width` below the top have CDF 1 on the whole range.
    let active: Vec<f64> = values
        .iter()
        .copied()
        .filter(|&v| top - v < width)
        .collect();
    if active.len() < 2 {
        return top;
    }
    let (lo, hi) = (top - spread, top + spread);
    let mut breaks = vec![lo, hi];
    for &v in &active {
        breaks.extend(
            [v - spread, v + spread]
                .into_iter()
                .filter(|&b| b > lo && b < hi),
        );
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    let rule = gauss_legendre();
    let mut integral = 0.0;
    for w in breaks.windows(2) {
        let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        let mut s = 0.0;
        for &(x, wt) in rule.iter() {
            let y = mid + half * x;
            s += wt
                * active
                    .iter()
                    .map(|&a| kernel_cdf((y - a) / width))
                    .product::<f64>();
        }
        integral += half * s;
    }
    hi - integral
}

/// Nodewise regularized maximum of two or three fields on one grid.
pub fn reg_max(inputs: &[&Field], spread: f64) -> Result<Field> {
    if !(2..=3).contains(&inputs.len()) {
        return Err(Error::InvalidInput(format!(
            "reg_max takes 2 or 3 fields, got {}",
            inputs.len()
        )));
    }
    if !(spread > 0.0) {
        return Err(Error::InvalidInput(format!(
            "spread = {spread} must be positive"
        )));
    }
    let g = *inputs[0].grid();
    for f in &inputs[1..] {
        g.ensure_same(f.grid())?;
    }
    let mut out = Vec::with_capacity(g.len());
    let mut buf = [0.0; 3];
    for idx in 0..g.len() {
        for (b, f) in buf.iter_mut().zip(inputs) {
            *b = f.values()[idx];
        }
        out.push(reg_max_scalar(&buf[..inputs.len()], spread));
    }
    Field::from_values(g, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    // 1/2 - int Theta^2 over [-1/2, 1/2], evaluated at 30 digits offline.
    const RM_00: f64 = 0.085_929_550_325_835_156;
    const RM_000: f64 = 0.128_894_325_488_752_733;
    const RM_0_03: f64 = 0.307_357_538_091_940_181;

    /// Brute-force `E[max]` by midpoint quadrature over the product density.
    fn brute_pair(a: f64, b: f64) -> f64 {
        let n = 2000;
        let h = 1.0 / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let y1 = -0.5 + (i as f64 + 0.5) * h;
            let w1 = kernel(y1) * h;
            for j in 0..n {
                let y2 = -0.5 + (j as f64 + 0.5) * h;
                s += (a + y1).max(b + y2) * w1 * kernel(y2) * h;
            }
        }
        s
    }

    #[test]
    fn kernel_has_unit_mass() {
        assert_eq!(kernel_cdf(-0.5), 0.0);
        assert!((kernel_cdf(0.5) - 1.0).abs() < 1e-15);
        assert!((kernel_cdf(0.0) - 0.5).abs() < 1e-15);
        let rule = gauss_legendre();
        let mass: f64 = rule.iter().map(|&(x, w)| 0.5 * w * kernel(0.5 * x)).sum();
        assert!((mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn frozen_values() {
        assert!((reg_max_scalar(&[0.0, 0.0], 0.5) - RM_00).abs() < 1e-14);
        assert!((reg_max_scalar(&[0.0, 0.0, 0.0], 0.5) - RM_000).abs() < 1e-14);
        assert!((reg_max_scalar(&[0.0, 0.3], 0.5) - RM_0_03).abs() < 1e-14);
    }

    #[test]
    fn agrees_with_brute_force() {
        for (a, b) in [(0.0, 0.0), (0.0, 0.3), (1.2, 0.5), (-0.1, 0.2)] {
            let r = reg_max_scalar(&[a, b], 0.5);
            assert!((r - brute_pair(a, b)).abs() < 1e-6, "{a} {b}");
        }
    }

    #[test]
    fn exact_beyond_gap() {
        assert_eq!(reg_max_scalar(&[3.0, 0.0], 0.5), 3.0);
        assert_eq!(reg_max_scalar(&[0.0, 1.0], 0.5), 1.0);
        assert_eq!(reg_max_scalar(&[-5.0, 2.0, 0.9], 0.5), 2.0);
    }

    #[test]
    fn translation_equivariant() {
        let a = reg_max_scalar(&[0.1, 0.4, -0.2], 0.5);
        let b = reg_max_scalar(&[10.1, 10.4, 9.8], 0.5);
        assert!((b - 10.0 - a).abs() < 1e-12);
    }

    #[test]
    fn spread_scales() {
        let a = reg_max_scalar(&[0.0, 0.3], 0.5);
        let b = reg_max_scalar(&[0.0, 0.6], 1.0);
        assert!((b - 2.0 * a).abs() < 1e-13);
    }

    #[test]
    fn many_close_inputs_stay_in_band() {
        let v = [0.0, 0.1, 0.2, 0.3, 0.4, -0.1, -0.2, 0.05, 0.15];
        let r = reg_max_scalar(&v, 0.5);
        assert!(r > 0.4 && r <= 0.9);
    }

    #[test]
    fn field_version_checks_grids() {
        use crate::field::ProductGrid;
        let g1 = ProductGrid::new(8, 8, 9, false).unwrap();
        let g2 = ProductGrid::new(8, 8, 11, false).unwrap();
        let a = Field::zeros(g1);
        let b = Field::zeros(g2);
        assert!(reg_max(&[&a, &b], 0.5).is_err());
        let m = reg_max(&[&a, &a], 0.5).unwrap();
        assert!(m.values().iter().all(|&v| (v - RM_00).abs() < 1e-14));
    }
}

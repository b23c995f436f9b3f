//! Reference geodesics for data depending on `x1` only, with `a = 1`.
//!
//! In that sector the form is `G = diag(1 + Phi_xx / 4, Phi_tt / 4)` with
//! off-diagonal `Phi_xt / 4`, so `det G = ((4 + Phi_xx) Phi_tt - Phi_xt^2) / 16`.
//! The lift `V = 2x^2 + Phi` turns this into the real homogeneous equation
//! `V_xx V_tt - V_xt^2 = 0`: `V` is the convex envelope in `(x, t)` of the
//! two lifted endpoints, and its Legendre transform in `x` is linear in `t`.
//!
//! Two constructions are provided: [`geodesic_by_duality`] interpolates
//! conjugates, [`convex_envelope_2d`] takes the Minkowski sum of scaled
//! epigraphs. Both are exact for the piecewise linear interpolants of the
//! sampled lifts, so they agree to roundoff.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, ProductGrid, TorusField};

/// Periods unrolled on each side of the base cell.
pub const WINDOW: usize = 3;
pub const CONVEXITY_TOL: f64 = 1e-10;
pub const PERIODICITY_TOL: f64 = 1e-10;
/// Relative gap below which two conjugate breakpoints are merged.
pub const SLOPE_MERGE_TOL: f64 = 1e-10;

/// Samples of `V(x) = 2x^2 + u(x)` at `x = (i + offset) / n + m` for
/// `m = -K..=K`, ascending in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexLift {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub window: usize,
    /// Samples per period.
    pub period_len: usize,
    /// First sample of the base cell `[0, 1)`.
    pub base_start: usize,
}

impl ConvexLift {
    /// `u` sampled at `(i + offset) / n`, `i = 0..n`.
    pub fn new(u: &[f64], offset: f64, window: usize) -> Result<Self> {
        let n = u.len();
        if n < 3 || window < 2 {
            return Err(Error::InvalidInput(format!(
                "lift needs at least 3 samples and a window of 2 periods (got {n}, {window})"
            )));
        }
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sample {i} of the endpoint is not finite"
            )));
        }
        let mut x = Vec::with_capacity((2 * window + 1) * n);
        let mut v = Vec::with_capacity(x.capacity());
        for m in -(window as i64)..=(window as i64) {
            for (i, &ui) in u.iter().enumerate() {
                let xi = (i as f64 + offset) / n as f64 + m as f64;
                x.push(xi);
                v.push(2.0 * xi * xi + ui);
            }
        }
        let lift = Self {
            x,
            v,
            window,
            period_len: n,
            base_start: window * n,
        };
        lift.check()?;
        Ok(lift)
    }

    pub fn from_torus(u: &TorusField) -> Result<Self> {
        let row = x1_profile(u)?;
        Self::new(&row, node_offset(u.grid()), WINDOW)
    }

    /// Discrete convexity and quasi-periodicity.
    pub fn check(&self) -> Result<()> {
        for i in 1..self.x.len() - 1 {
            let (h0, h1) = (self.x[i] - self.x[i - 1], self.x[i + 1] - self.x[i]);
            let d2 = ((self.v[i + 1] - self.v[i]) / h1 - (self.v[i] - self.v[i - 1]) / h0)
                * 0.5
                * (h0 + h1);
            if d2 < -CONVEXITY_TOL {
                return Err(Error::NonConvexLift {
                    index: i,
                    second_difference: d2,
                });
            }
        }
        let n = self.period_len;
        let c0 = self.v[n] - self.v[0] - 4.0 * self.x[0] - 2.0;
        for i in 0..self.x.len() - n {
            let c = self.v[i + n] - self.v[i] - 4.0 * self.x[i] - 2.0;
            if (c - c0).abs() > PERIODICITY_TOL * (1.0 + self.v[i].abs()) {
                return Err(Error::InvalidInput(format!(
                    "lift is not quasi-periodic at sample {i}: {c} vs {c0}"
                )));
            }
        }
        Ok(())
    }

    /// Chord slopes, nondecreasing for a convex lift.
    pub fn slopes(&self) -> Vec<f64> {
        self.x
            .windows(2)
            .zip(self.v.windows(2))
            .map(|(x, v)| (v[1] - v[0]) / (x[1] - x[0]))
            .collect()
    }

    pub fn base_x(&self) -> &[f64] {
        &self.x[self.base_start..self.base_start + self.period_len]
    }
}

/// Position of node `i` inside its cell, as a fraction of the spacing.
pub fn node_offset(g: &ProductGrid) -> f64 {
    if g.offset() {
        0.5
    } else {
        0.0
    }
}

/// `x1` profile of a field that does not depend on `x2`.
fn x1_profile(u: &TorusField) -> Result<Vec<f64>> {
    let g = u.grid();
    let row: Vec<f64> = (0..g.nx1()).map(|i| u.at(i, 0)).collect();
    for i2 in 1..g.nx2() {
        for (i1, r) in row.iter().enumerate() {
            if (u.at(i1, i2) - r).abs() > 1e-12 * (1.0 + r.abs()) {
                return Err(Error::InvalidInput(format!(
                    "endpoint depends on x2 at ({i1}, {i2}); the oracle needs x1-only data"
                )));
            }
        }
    }
    Ok(row)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dual {
    pub p: Vec<f64>,
    pub value: Vec<f64>,
    /// Slopes moved into the attained range.
    pub clamped: usize,
}

/// `V*(p) = max_i (p x_i - V_i)` at ascending `slopes`, by a monotone scan:
/// for a convex lift the maximizer does not move left as `p` grows. Slopes
/// outside the range of chord slopes are clamped to it (the conjugate of
/// the truncated window is meaningless there) and counted.
pub fn discrete_legendre(lift: &ConvexLift, slopes: &[f64]) -> Result<Dual> {
    if slopes.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("slopes must be ascending".into()));
    }
    let chords = lift.slopes();
    let (lo, hi) = (chords[0], chords[chords.len() - 1]);
    let mut clamped = 0;
    let mut i = 0;
    let mut p_out = Vec::with_capacity(slopes.len());
    let mut value = Vec::with_capacity(slopes.len());
    for &p0 in slopes {
        let p = if p0 < lo || p0 > hi {
            clamped += 1;
            p0.clamp(lo, hi)
        } else {
            p0
        };
        while i + 1 < lift.x.len() && chords[i] <= p {
            i += 1;
        }
        p_out.push(p);
        value.push(p * lift.x[i] - lift.v[i]);
    }
    Ok(Dual {
        p: p_out,
        value,
        clamped,
    })
}

/// Inverse transform `sup_j (p_j x - W(p_j))` of a conjugate given at its
/// breakpoints, at ascending `x`.
fn inverse_legendre(p: &[f64], w: &[f64], x: &[f64]) -> Vec<f64> {
    let mut j = 0;
    x.iter()
        .map(|&xx| {
            while j + 1 < p.len() && p[j + 1] * xx - w[j + 1] >= p[j] * xx - w[j] {
                j += 1;
            }
            p[j] * xx - w[j]
        })
        .collect()
}

/// Lifted geodesic profile `V_t` on the base cell of `l0`. Both conjugates
/// are piecewise linear with breakpoints at the chord slopes, so the
/// interpolated conjugate is known exactly at the merged slope set.
fn dual_profile(l0: &ConvexLift, l1: &ConvexLift, t: f64) -> Result<Vec<f64>> {
    let (s0, s1) = (l0.slopes(), l1.slopes());
    let lo = s0[0].max(s1[0]);
    let hi = s0[s0.len() - 1].min(s1[s1.len() - 1]);
    let mut p: Vec<f64> = s0
        .iter()
        .chain(&s1)
        .copied()
        .filter(|&s| s >= lo && s <= hi)
        .collect();
    p.sort_by(f64::total_cmp);
    // Equal slopes of the two lifts differ by roundoff; keeping both makes
    // the conjugate's difference quotients noise and stalls the scan below.
    p.dedup_by(|b, a| *b - *a <= SLOPE_MERGE_TOL * (1.0 + a.abs()));
    let d0 = discrete_legendre(l0, &p)?;
    let d1 = discrete_legendre(l1, &p)?;
    let w: Vec<f64> = d0
        .value
        .iter()
        .zip(&d1.value)
        .map(|(a, b)| (1.0 - t) * a + t * b)
        .collect();
    Ok(inverse_legendre(&p, &w, l0.base_x()))
}

/// Unlifted geodesic profiles `Phi(., t)` for endpoint samples at
/// `(i + offset) / n`, one row per entry of `t_levels`.
pub fn geodesic_profiles(
    u0: &[f64],
    u1: &[f64],
    offset: f64,
    t_levels: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if u0.len() != u1.len() {
        return Err(Error::GridMismatch(
            "endpoint profiles differ in length".into(),
        ));
    }
    let l0 = ConvexLift::new(u0, offset, WINDOW)?;
    let l1 = ConvexLift::new(u1, offset, WINDOW)?;
    t_levels
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(u0.to_vec());
            }
            if t == 1.0 {
                return Ok(u1.to_vec());
            }
            let v = dual_profile(&l0, &l1, t)?;
            Ok(unlift(&v, l0.base_x()))
        })
        .collect()
}

fn unlift(v: &[f64], x: &[f64]) -> Vec<f64> {
    v.iter().zip(x).map(|(v, x)| v - 2.0 * x * x).collect()
}

fn lifted_window(u: &[f64], offset: f64) -> (Vec<f64>, Vec<f64>) {
    let n = u.len();
    let mut x = Vec::with_capacity((2 * WINDOW + 1) * n);
    let mut v = Vec::with_capacity(x.capacity());
    for m in -(WINDOW as i64)..=(WINDOW as i64) {
        for (i, &ui) in u.iter().enumerate() {
            let xi = (i as f64 + offset) / n as f64 + m as f64;
            x.push(xi);
            v.push(2.0 * xi * xi + ui);
        }
    }
    (x, v)
}

/// Unlifted profiles of the convex envelope of the lifted boundary data.
pub fn envelope_profiles(
    u0: &[f64],
    u1: &[f64],
    offset: f64,
    t_levels: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if u0.len() != u1.len() {
        return Err(Error::GridMismatch(
            "endpoint profiles differ in length".into(),
        ));
    }
    let n = u0.len();
    let (x0, v0) = lifted_window(u0, offset);
    let (x1, v1) = lifted_window(u1, offset);
    let h0 = lower_hull(&x0, &v0);
    let h1 = lower_hull(&x1, &v1);
    let base = &x0[WINDOW * n..(WINDOW + 1) * n];
    t_levels
        .iter()
        .map(|&t| {
            Ok(unlift(
                &eval_chain(&minkowski_chain(&h0, &h1, t), base)?,
                base,
            ))
        })
        .collect()
}

fn to_field(g: ProductGrid, rows: Vec<Vec<f64>>) -> Result<Field> {
    if rows.len() != g.nt() {
        return Err(Error::GridMismatch(format!(
            "{} t levels for a grid with nt = {}",
            rows.len(),
            g.nt()
        )));
    }
    let mut values = Vec::with_capacity(g.len());
    for row in &rows {
        for _ in 0..g.nx2() {
            values.extend_from_slice(row);
        }
    }
    Field::from_values(g, values)
}

/// The grid's own `t` values.
pub fn grid_t_levels(g: &ProductGrid) -> Vec<f64> {
    (0..g.nt()).map(|k| g.t(k)).collect()
}

/// Geodesic `Phi(x, t)` by linear interpolation of conjugates, on the grid
/// of `phi0` with one entry of `t_levels` per layer. Rejects endpoints whose
/// lift is not convex.
pub fn geodesic_by_duality(
    phi0: &TorusField,
    phi1: &TorusField,
    t_levels: &[f64],
) -> Result<Field> {
    let g = *phi0.grid();
    g.ensure_same(phi1.grid())?;
    let rows = geodesic_profiles(
        &x1_profile(phi0)?,
        &x1_profile(phi1)?,
        node_offset(&g),
        t_levels,
    )?;
    to_field(g, rows)
}

/// Geodesic between endpoint functions of `x1`, computed on a grid `refine`
/// times finer than `grid` and restricted to it. The kinks of the exact
/// piecewise linear answer sit between samples, so second differences of
/// [`geodesic_by_duality`] carry O(1) noise; refining shrinks it by
/// `refine^2`.
pub fn geodesic_from_fn(
    grid: ProductGrid,
    f0: impl Fn(f64) -> f64,
    f1: impl Fn(f64) -> f64,
    t_levels: &[f64],
    refine: usize,
) -> Result<Field> {
    if refine == 0 || (refine > 1 && refine % 2 != 0) {
        return Err(Error::InvalidInput(format!(
            "refine = {refine} must be 1 or even"
        )));
    }
    let n = grid.nx1() * refine;
    let off = node_offset(&grid);
    let fine_off = if refine == 1 { off } else { 0.0 };
    let sample = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        (0..n)
            .map(|i| f((i as f64 + fine_off) / n as f64))
            .collect()
    };
    let rows = geodesic_profiles(&sample(&f0), &sample(&f1), fine_off, t_levels)?;
    let start = (off * refine as f64) as usize;
    let coarse = rows
        .into_iter()
        .map(|r| r.into_iter().skip(start).step_by(refine).collect())
        .collect();
    to_field(grid, coarse)
}

/// Lower convex hull of `(x_i, v_i)`, `x` ascending.
fn lower_hull(x: &[f64], v: &[f64]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(x.len());
    for (&xi, &vi) in x.iter().zip(v) {
        while hull.len() >= 2 {
            let (ax, av) = hull[hull.len() - 2];
            let (bx, bv) = hull[hull.len() - 1];
            // Drop b when it lies on or above the chord from a to the new point.
            if (bv - av) * (xi - ax) >= (vi - av) * (bx - ax) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((xi, vi));
    }
    hull
}

/// Minkowski sum of the epigraphs of `(1-t) h0` and `t h1`: the edges of
/// both chains merged by slope, starting from the sum of the left ends.
fn minkowski_chain(h0: &[(f64, f64)], h1: &[(f64, f64)], t: f64) -> Vec<(f64, f64)> {
    let edges = |h: &[(f64, f64)], s: f64| -> Vec<(f64, f64, f64)> {
        if s == 0.0 {
            return Vec::new();
        }
        h.windows(2)
            .map(|w| {
                let (dx, dv) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
                (dv / dx, s * dx, s * dv)
            })
            .collect()
    };
    let (e0, e1) = (edges(h0, 1.0 - t), edges(h1, t));
    let mut cur = (
        (1.0 - t) * h0[0].0 + t * h1[0].0,
        (1.0 - t) * h0[0].1 + t * h1[0].1,
    );
    let mut chain = Vec::with_capacity(e0.len() + e1.len() + 1);
    chain.push(cur);
    let (mut i, mut j) = (0, 0);
    while i < e0.len() || j < e1.len() {
        let take0 = j >= e1.len() || (i < e0.len() && e0[i].0 <= e1[j].0);
        let (_, dx, dv) = if take0 {
            i += 1;
            e0[i - 1]
        } else {
            j += 1;
            e1[j - 1]
        };
        cur = (cur.0 + dx, cur.1 + dv);
        chain.push(cur);
    }
    chain
}

/// Piecewise linear interpolation on an ascending chain.
fn eval_chain(chain: &[(f64, f64)], x: &[f64]) -> Result<Vec<f64>> {
    let mut j = 0;
    x.iter()
        .map(|&xx| {
            if xx < chain[0].0 || xx > chain[chain.len() - 1].0 {
                return Err(Error::InvalidInput(format!(
                    "x = {xx} lies outside the hull window"
                )));
            }
            while j + 2 < chain.len() && chain[j + 1].0 < xx {
                j += 1;
            }
            let ((x0, v0), (x1, v1)) = (chain[j], chain[j + 1]);
            let s = if x1 > x0 { (xx - x0) / (x1 - x0) } else { 0.0 };
            Ok(v0 + s * (v1 - v0))
        })
        .collect()
}

/// Largest function convex in `(x, t)` below the lifted boundary data, by
/// Minkowski sums of the lower hulls of the two endpoint lifts. Non-convex
/// lifts are accepted and replaced by their hulls.
pub fn convex_envelope_2d(phi0: &TorusField, phi1: &TorusField, t_levels: &[f64]) -> Result<Field> {
    let g = *phi0.grid();
    g.ensure_same(phi1.grid())?;
    let rows = envelope_profiles(
        &x1_profile(phi0)?,
        &x1_profile(phi1)?,
        node_offset(&g),
        t_levels,
    )?;
    to_field(g, rows)
}

/// Endpoint whose lift is the convex hull of `2x^2 + amp cos(2 pi x)`, minus
/// `2x^2`. For `amp > 1 / pi^2` the lift has flat pieces, so its conjugate
/// has corners and the geodesic is `C^{1,1}` but not `C^2`.
pub fn hull_endpoint(grid: ProductGrid, amp: f64) -> Result<TorusField> {
    let raw: Vec<f64> = (0..grid.nx1())
        .map(|i| amp * (2.0 * std::f64::consts::PI * grid.x1(i)).cos())
        .collect();
    let rows = envelope_profiles(&raw, &raw, node_offset(&grid), &[1.0])?;
    let row = &rows[0];
    TorusField::from_values(
        grid,
        (0..grid.layer_len()).map(|j| row[j % grid.nx1()]).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(nx: usize, nt: usize) -> ProductGrid {
        ProductGrid::new(nx, 8, nt, true).unwrap()
    }

    #[test]
    fn quadratic_duals() {
        let g = grid(64, 9);
        let lift = ConvexLift::from_torus(&TorusField::constant(g, 0.0)).unwrap();
        let p: Vec<f64> = (-8..=8).map(|i| i as f64).collect();
        let d = discrete_legendre(&lift, &p).unwrap();
        let h = 1.0 / 64.0;
        for (pp, v) in d.p.iter().zip(&d.value) {
            // Sampling only lowers the sup, by at most 2 (h/2)^2.
            let exact = pp * pp / 8.0;
            assert!(
                *v <= exact + 1e-12 && *v >= exact - 0.5 * h * h,
                "{pp}: {v} vs {exact}"
            );
        }
        let shifted = ConvexLift::from_torus(&TorusField::constant(g, 0.7)).unwrap();
        let ds = discrete_legendre(&shifted, &p).unwrap();
        for (a, b) in ds.value.iter().zip(&d.value) {
            assert!((a - (b - 0.7)).abs() < 1e-12);
        }
        assert_eq!(d.clamped, 0);
        let far = discrete_legendre(&lift, &[-1e3, 1e3]).unwrap();
        assert_eq!(far.clamped, 2);
    }

    #[test]
    fn double_transform_is_close() {
        for nx in [32usize, 64, 128] {
            let g = grid(nx, 9);
            let u = TorusField::from_fn(g, |x, _| 0.05 * (2.0 * PI * x).cos());
            let lift = ConvexLift::from_torus(&u).unwrap();
            let h = 1.0 / nx as f64;
            let p: Vec<f64> = (0..4000)
                .map(|i| -14.0 + 28.0 * i as f64 / 3999.0)
                .collect();
            let d = discrete_legendre(&lift, &p).unwrap();
            let back = inverse_legendre(&d.p, &d.value, lift.base_x());
            let err = back
                .iter()
                .zip(&lift.v[lift.base_start..])
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err <= 2.0 * h * h, "nx {nx}: {err}");
        }
    }

    #[test]
    fn non_convex_lift_is_rejected() {
        let g = grid(64, 9);
        let u = TorusField::from_fn(g, |x, _| 0.25 * (2.0 * PI * x).cos());
        assert!(matches!(
            ConvexLift::from_torus(&u),
            Err(Error::NonConvexLift { .. })
        ));
        let g2 = ProductGrid::new(8, 8, 9, true).unwrap();
        let u2 = TorusField::from_fn(g2, |_, y| y);
        assert!(ConvexLift::from_torus(&u2).is_err());
    }

    #[test]
    fn trivial_geodesics() {
        let g = grid(64, 9);
        let ts = grid_t_levels(&g);
        let phi0 = TorusField::from_fn(g, |x, _| 0.02 * (2.0 * PI * x).sin());
        let phi1 = phi0.map(|v| v + 0.3);
        let geo = geodesic_by_duality(&phi0, &phi1, &ts).unwrap();
        let env = convex_envelope_2d(&phi0, &phi1, &ts).unwrap();
        for k in 0..g.nt() {
            for i in 0..g.nx1() {
                let want = phi0.at(i, 0) + 0.3 * g.t(k);
                assert!(
                    (geo.at(i, 0, k) - want).abs() < 1e-9,
                    "{i} {k} {} {want}",
                    geo.at(i, 0, k)
                );
                assert!((env.at(i, 0, k) - want).abs() < 1e-9);
            }
        }
        let same = geodesic_by_duality(&phi0, &phi0, &ts).unwrap();
        for k in 0..g.nt() {
            assert!(same
                .layer(k)
                .iter()
                .zip(phi0.values())
                .all(|(a, b)| (a - b).abs() < 1e-9));
        }
    }

    fn ma_measure(geo: &Field) -> f64 {
        let g = *geo.grid();
        let (hx, ht) = (g.hx1(), g.ht());
        let lift = |i: usize, k: usize| geo.at(i, 0, k) + 2.0 * g.x1(i) * g.x1(i);
        let mut worst: f64 = 0.0;
        for k in 1..g.nt() - 1 {
            for i in 1..g.nx1() - 1 {
                let vxx = (lift(i + 1, k) - 2.0 * lift(i, k) + lift(i - 1, k)) / (hx * hx);
                let vtt = (lift(i, k + 1) - 2.0 * lift(i, k) + lift(i, k - 1)) / (ht * ht);
                let vxt = (lift(i + 1, k + 1) - lift(i - 1, k + 1) - lift(i + 1, k - 1)
                    + lift(i - 1, k - 1))
                    / (4.0 * hx * ht);
                worst = worst.max((vxx * vtt - vxt * vxt).abs());
            }
        }
        worst
    }

    #[test]
    fn refined_oracle_is_degenerate() {
        let mut prev = f64::INFINITY;
        for r in [1usize, 4, 16] {
            let g = grid(128, 17);
            let ts = grid_t_levels(&g);
            let geo = geodesic_from_fn(
                g,
                |_| 0.0,
                |x| (2.0 * PI * x).cos() / (4.0 * PI * PI),
                &ts,
                r,
            )
            .unwrap();
            let coarse = geodesic_by_duality(
                &TorusField::constant(g, 0.0),
                &TorusField::from_fn(g, |x, _| (2.0 * PI * x).cos() / (4.0 * PI * PI)),
                &ts,
            )
            .unwrap();
            if r == 1 {
                assert!(geo.max_abs_diff(&coarse).unwrap() < 1e-14);
            } else {
                assert!(geo.max_abs_diff(&coarse).unwrap() < 1e-4);
            }
            let w = ma_measure(&geo);
            eprintln!("refine {r}: {w}");
            assert!(w < 0.25 * prev || r == 1);
            prev = w;
        }
    }

    #[test]
    fn constructions_agree() {
        for nx in [64usize, 256] {
            let g = grid(nx, 17);
            let ts = grid_t_levels(&g);
            let phi0 = TorusField::constant(g, 0.0);
            let phi1 = TorusField::from_fn(g, |x, _| (2.0 * PI * x).cos() / (4.0 * PI * PI));
            let geo = geodesic_by_duality(&phi0, &phi1, &ts).unwrap();
            let env = convex_envelope_2d(&phi0, &phi1, &ts).unwrap();
            assert!(geo.max_abs_diff(&env).unwrap() < 1e-12);
        }
    }

    #[test]
    fn hull_endpoint_is_convex_and_flat() {
        let g = grid(128, 9);
        let u = hull_endpoint(g, 0.15).unwrap();
        let lift = ConvexLift::from_torus(&u).unwrap();
        let raw = TorusField::from_fn(g, |x, _| 0.15 * (2.0 * PI * x).cos());
        assert!(u
            .values()
            .iter()
            .zip(raw.values())
            .all(|(a, b)| *a <= b + 1e-12));
        // Somewhere the hull replaces the data by a chord.
        assert!(u
            .values()
            .iter()
            .zip(raw.values())
            .any(|(a, b)| *a < b - 1e-3));
        assert!(lift
            .slopes()
            .windows(2)
            .any(|w| (w[1] - w[0]).abs() < 1e-12));
    }
}

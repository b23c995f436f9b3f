//! Property tests spanning several modules.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::field::io::{from_bytes, to_bytes};
use crate::field::{Field, ProductGrid, TorusField};
use crate::harness::{estimate_report, oracle_compare, QVariant};
use crate::model::{build_problem, reg_max_scalar, ModelParams, Preset, Problem};
use crate::oracle::{convex_envelope_2d, geodesic_by_duality, grid_t_levels};
use proptest::prelude::*;

fn grid() -> ProductGrid {
    ProductGrid::new(16, 16, 17, true).unwrap()
}

fn log_singular() -> &'static Problem {
    static P: OnceLock<Problem> = OnceLock::new();
    P.get_or_init(|| {
        build_problem(
            Preset::LogSingularC1,
            grid(),
            &[0.25],
            ModelParams::default(),
        )
        .unwrap()
    })
}

/// A psh endpoint `sum a_m cos(2 pi m x1 + s_m)` with `sum |a_m| (2 pi m)^2 <= 3`.
fn endpoint(g: ProductGrid, coeffs: &[(f64, f64)], shift: f64) -> TorusField {
    let total: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(m, (a, _))| a.abs() * (2.0 * PI * (m + 1) as f64).powi(2))
        .sum();
    let scale = if total > 3.0 { 3.0 / total } else { 1.0 };
    TorusField::from_fn(g, |x, _| {
        shift
            + coeffs
                .iter()
                .enumerate()
                .map(|(m, (a, s))| scale * a * (2.0 * PI * (m + 1) as f64 * x + s).cos())
                .sum::<f64>()
    })
}

fn smooth_field(g: ProductGrid, c: [f64; 4]) -> Field {
    Field::from_fn(g, |x, y, t| {
        c[0] * (2.0 * PI * x).sin()
            + c[1] * (2.0 * PI * (x + y)).cos() * t
            + c[2] * t * t
            + c[3] * (4.0 * PI * y).sin()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reg_max_bounds_and_symmetry(values in prop::collection::vec(-5.0f64..5.0, 1..6), spread in 0.05f64..1.0) {
        let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let r = reg_max_scalar(&values, spread);
        prop_assert!(r >= m - 1e-12 && r <= m + spread + 1e-12);
        let mut rev = values.clone();
        rev.reverse();
        prop_assert!((reg_max_scalar(&rev, spread) - r).abs() < 1e-12);
    }

    #[test]
    fn reg_max_is_monotone_and_translation_equivariant(
        values in prop::collection::vec(-3.0f64..3.0, 2..5),
        bump in 0.0f64..1.0,
        c in -10.0f64..10.0,
    ) {
        let r = reg_max_scalar(&values, 0.5);
        let mut up = values.clone();
        up[0] += bump;
        prop_assert!(reg_max_scalar(&up, 0.5) >= r - 1e-12);
        let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
        prop_assert!((reg_max_scalar(&shifted, 0.5) - (r + c)).abs() < 1e-9);
    }

    #[test]
    fn field_bytes_roundtrip(seed in prop::collection::vec(-1e6f64..1e6, 4)) {
        let g = ProductGrid::new(8, 8, 9, false).unwrap();
        let f = smooth_field(g, [seed[0], seed[1], seed[2], seed[3]]);
        prop_assert_eq!(from_bytes(g, &to_bytes(&f)).unwrap(), f);
    }

    #[test]
    fn constant_shift_is_seen_by_the_sup_only(c in -1.0f64..1.0, coeffs in prop::array::uniform4(-1.0f64..1.0)) {
        let g = ProductGrid::new(16, 8, 9, true).unwrap();
        let a = smooth_field(g, coeffs);
        let r = oracle_compare(&a.map(|v| v + c), &a).unwrap();
        prop_assert!((r.sup - c.abs()).abs() < 1e-12);
        prop_assert!(r.first_difference_sup < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn weighted_sups_do_not_increase_with_b(coeffs in prop::array::uniform4(-1.0f64..1.0), b in 0.0f64..6.0, db in 0.1f64..4.0) {
        let p = log_singular();
        let u = smooth_field(grid(), coeffs);
        let lo = estimate_report(&u, 0.25, 1.0, &p.model, b, QVariant::Gradient).unwrap();
        let hi = estimate_report(&u, 0.25, 1.0, &p.model, b + db, QVariant::Gradient).unwrap();
        let tol = |x: f64| 1e-12 * (1.0 + x);
        prop_assert!(hi.weighted_grad <= lo.weighted_grad + tol(lo.weighted_grad));
        prop_assert!(hi.weighted_lap <= lo.weighted_lap + tol(lo.weighted_lap));
        prop_assert!(hi.weighted_hess <= lo.weighted_hess + tol(lo.weighted_hess));
        prop_assert!(hi.weighted_hess_boundary <= lo.weighted_hess_boundary + tol(lo.weighted_hess_boundary));
        prop_assert_eq!(hi.unweighted_hess, lo.unweighted_hess);
    }

    #[test]
    fn dual_geodesics_interpolate_and_stay_convex_in_t(
        c0 in prop::collection::vec((-0.05f64..0.05, 0.0f64..6.3), 1..4),
        c1 in prop::collection::vec((-0.05f64..0.05, 0.0f64..6.3), 1..4),
        s0 in -1.0f64..1.0,
        s1 in -1.0f64..1.0,
    ) {
        let g = ProductGrid::new(64, 8, 17, true).unwrap();
        let ts = grid_t_levels(&g);
        let (phi0, phi1) = (endpoint(g, &c0, s0), endpoint(g, &c1, s1));
        let geo = geodesic_by_duality(&phi0, &phi1, &ts).unwrap();
        prop_assert!(geo.layer(0) == phi0.values() && geo.layer(g.nt() - 1) == phi1.values());
        let env = convex_envelope_2d(&phi0, &phi1, &ts).unwrap();
        prop_assert!(geo.max_abs_diff(&env).unwrap() < 1e-9);
        let n = g.layer_len();
        let v = geo.values();
        for j in 0..n {
            for k in 1..g.nt() - 1 {
                let t = ts[k];
                let chord = (1.0 - t) * phi0.values()[j] + t * phi1.values()[j];
                prop_assert!(v[k * n + j] <= chord + 1e-10);
                prop_assert!(v[(k - 1) * n + j] - 2.0 * v[k * n + j] + v[(k + 1) * n + j] >= -1e-10);
            }
        }
    }
}

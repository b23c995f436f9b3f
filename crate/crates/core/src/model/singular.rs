use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, ProductGrid, TorusField};
use crate::model::BaseForm;

/// Torus points excluded from estimates, with an exclusion radius in grid
/// cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularMask {
    pub points: Vec<[f64; 2]>,
    pub radius_cells: f64,
}

impl SingularMask {
    pub fn radius(&self, grid: &ProductGrid) -> f64 {
        self.radius_cells * grid.hx1().max(grid.hx2())
    }

    /// Whether torus node `(i1, i2)` lies inside the exclusion zone.
    pub fn masked(&self, grid: &ProductGrid, i1: usize, i2: usize) -> bool {
        let r = self.radius(grid);
        self.points
            .iter()
            .any(|&p| grid.torus_distance(i1, i2, p) < r)
    }

    pub fn with_radius(&self, radius_cells: f64) -> Self {
        Self {
            points: self.points.clone(),
            radius_cells,
        }
    }
}

/// `(c/2) log(sin^2(pi x1) + sin^2(pi x2))`, before normalization.
pub fn log_model_raw(c: f64, x1: f64, x2: f64) -> f64 {
    let s = (PI * x1).sin().powi(2) + (PI * x2).sin().powi(2);
    0.5 * c * s.ln()
}

/// Singular weight `psi`, degeneracy profile `F` and the derived
/// `tilde_psi = psi + (delta / 2C) F` with `B0 = 2C / delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularModel {
    /// Log-model coefficient; 0 means a bounded weight.
    pub c: f64,
    /// `psi` on the torus, normalized so its continuum supremum is
    /// `-1 - shift`.
    pub psi: TorusField,
    /// Extra downward shift making `psi <= phi` on the grid.
    pub shift: f64,
    pub f: TorusField,
    pub tilde_psi: TorusField,
    /// Quasi-psh constant of `F`: `i ddbar F >= -C omega` off the mask.
    pub quasi_psh_c: f64,
    pub b0: f64,
    pub c_pos: f64,
    pub delta: f64,
    /// Smallest eigenvalue of `alpha + i ddbar psi` off the mask, relative
    /// to `omega`. Positive when `psi` is a Kaehler current on the grid.
    pub psi_psh_margin: f64,
    pub mask: SingularMask,
}

/// Positivity available from `F` as built here: `F` is the log of the
/// harmonic mean of the endpoint densities, which is at most twice their
/// minimum.
pub const KEY_C_POS: f64 = 0.5;

impl SingularModel {
    pub fn grid(&self) -> &ProductGrid {
        self.psi.grid()
    }

    pub fn psi_field(&self) -> Field {
        Field::pullback(&self.psi)
    }

    pub fn f_field(&self) -> Field {
        Field::pullback(&self.f)
    }

    pub fn tilde_psi_field(&self) -> Field {
        Field::pullback(&self.tilde_psi)
    }

    pub fn masked(&self, i1: usize, i2: usize) -> bool {
        self.mask.masked(self.grid(), i1, i2)
    }

    /// Sup of `(|grad psi| + |hess psi|) e^{B0 psi}` off the mask.
    pub fn smoothness_certificate(&self) -> Result<f64> {
        let g = *self.grid();
        let psi = self.psi_field();
        let (gr, he, _) = crate::field::derivative_stats(&psi, |i1, i2, k| {
            k == g.nt() / 2 && !self.masked(i1, i2)
        })?;
        let k = g.nt() / 2;
        let mut sup: f64 = 0.0;
        for i2 in 0..g.nx2() {
            for i1 in 0..g.nx1() {
                if self.masked(i1, i2) {
                    continue;
                }
                let idx = g.index(i1, i2, k);
                let w = (self.b0 * self.psi.at(i1, i2)).exp();
                sup = sup.max((gr.values()[idx] + he.values()[idx]) * w);
            }
        }
        Ok(sup)
    }
}

/// Complex Laplacian `Delta_x u / 4` of a torus field.
fn ddbar(u: &TorusField) -> Vec<f64> {
    u.laplacian().into_iter().map(|v| 0.25 * v).collect()
}

/// Builds the singular model for endpoint potentials `phi0`, `phi1`.
///
/// `phi` is the endpoint subsolution on the product grid; `psi` is shifted
/// down until it lies below it.
pub fn make_singular_model(
    c: f64,
    base: &BaseForm,
    phi0: &TorusField,
    phi1: &TorusField,
    phi: &Field,
    delta: f64,
    mask_radius_cells: f64,
) -> Result<SingularModel> {
    let g = *base.grid();
    g.ensure_same(phi0.grid())?;
    g.ensure_same(phi1.grid())?;
    g.ensure_same(phi.grid())?;
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "log coefficient c = {c} must be >= 0"
        )));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "delta = {delta} must be positive"
        )));
    }
    let mask = SingularMask {
        points: if c > 0.0 {
            vec![[0.0, 0.0]]
        } else {
            Vec::new()
        },
        radius_cells: mask_radius_cells,
    };
    let top = 0.5 * c * LN_2 + 1.0;
    let mut psi = TorusField::from_fn(g, |x1, x2| {
        if c > 0.0 {
            log_model_raw(c, x1, x2) - top
        } else {
            -1.0
        }
    });
    if let Some(idx) = psi.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "psi is singular at grid node {}; enable the half-cell offset",
            g.node(idx)
        )));
    }

    let mut shift: f64 = 0.0;
    for (idx, &p) in phi.values().iter().enumerate() {
        shift = shift.max(psi.values()[idx % g.layer_len()] - p);
    }
    if shift > 0.0 {
        psi = psi.map(|v| v - shift);
    }

    // Endpoint densities a + ddbar(phi_k), combined by harmonic mean.
    let a = base.a().values();
    let d0 = ddbar(phi0);
    let d1 = ddbar(phi1);
    let mut log_h = Vec::with_capacity(g.layer_len());
    for j in 0..g.layer_len() {
        let (a0, a1) = (a[j] + d0[j], a[j] + d1[j]);
        for (which, v) in [(0, a0), (1, a1)] {
            if v < 0.0 {
                return Err(Error::NotSemipositive(format!(
                    "a + ddbar(phi{which}) = {v:.3e} at torus node {}",
                    g.node(j)
                )));
            }
        }
        let h = 2.0 * a0 * a1 / (a0 + a1);
        let l = h.ln();
        if !l.is_finite() {
            return Err(Error::InvalidModel(format!(
                "F is not finite at torus node {}",
                g.node(j)
            )));
        }
        log_h.push(l);
    }
    let top_f = log_h
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let f = TorusField::from_values(g, log_h.into_iter().map(|l| l - top_f).collect())?;

    let mut min_ddbar_f = f64::INFINITY;
    let mut psh_margin = f64::INFINITY;
    let dd_f = ddbar(&f);
    let dd_psi = ddbar(&psi);
    for i2 in 0..g.nx2() {
        for i1 in 0..g.nx1() {
            if mask.masked(&g, i1, i2) {
                continue;
            }
            let j = g.layer_index(i1, i2);
            min_ddbar_f = min_ddbar_f.min(dd_f[j]);
            psh_margin = psh_margin.min(a[j] + dd_psi[j]);
        }
    }
    let quasi_psh_c = (-min_ddbar_f).max(0.0);
    let (b0, tilde_psi) = if quasi_psh_c > 0.0 {
        let b0 = 2.0 * quasi_psh_c / delta;
        let tp = TorusField::from_values(
            g,
            psi.values()
                .iter()
                .zip(f.values())
                .map(|(p, fv)| p + fv / b0)
                .collect(),
        )?;
        (b0, tp)
    } else {
        // F is psh: any B0 works, take 1.
        let tp = TorusField::from_values(
            g,
            psi.values()
                .iter()
                .zip(f.values())
                .map(|(p, fv)| p + fv)
                .collect(),
        )?;
        (1.0, tp)
    };
    Ok(SingularModel {
        c,
        psi,
        shift,
        f,
        tilde_psi,
        quasi_psh_c,
        b0,
        c_pos: KEY_C_POS,
        delta,
        psi_psh_margin: psh_margin,
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_log_model_values() {
        assert!((log_model_raw(1.0, 0.5, 0.5) - 0.346_573_590_279_972_6).abs() < 1e-15);
        assert!((log_model_raw(1.0, 0.25, 0.0) + 0.346_573_590_279_972_6).abs() < 1e-15);
    }

    #[test]
    fn flat_density_gives_zero_profile() {
        let g = ProductGrid::new(16, 16, 9, true).unwrap();
        let base = BaseForm::constant(g, 1.0, 1.0).unwrap();
        let zero = TorusField::constant(g, 0.0);
        let phi = Field::from_fn(g, |_, _, _| 0.0);
        let m = make_singular_model(1.0, &base, &zero, &zero, &phi, 1.0, 4.0).unwrap();
        assert!(m.f.values().iter().all(|&v| v == 0.0));
        assert_eq!(m.tilde_psi, m.psi);
        assert!(m.psi.sup() <= -1.0);
        assert!(m
            .tilde_psi
            .values()
            .iter()
            .zip(m.psi.values())
            .all(|(a, b)| a <= b));
    }

    #[test]
    fn shift_puts_psi_below_phi() {
        let g = ProductGrid::new(16, 16, 9, true).unwrap();
        let base = BaseForm::constant(g, 1.0, 1.0).unwrap();
        let zero = TorusField::constant(g, 0.0);
        let phi = Field::from_fn(g, |_, _, _| -3.0);
        let m = make_singular_model(0.0, &base, &zero, &zero, &phi, 1.0, 4.0).unwrap();
        assert!((m.shift - 2.0).abs() < 1e-15);
        assert!(m.psi.values().iter().all(|&v| (v + 3.0).abs() < 1e-15));
    }

    #[test]
    fn negative_density_is_rejected() {
        let g = ProductGrid::new(16, 16, 9, true).unwrap();
        let base = BaseForm::constant(g, 1.0, 1.0).unwrap();
        let zero = TorusField::constant(g, 0.0);
        let bad = TorusField::from_fn(g, |x1, _| 0.5 * (2.0 * PI * x1).cos());
        let phi = Field::zeros(g);
        assert!(matches!(
            make_singular_model(0.0, &base, &zero, &bad, &phi, 1.0, 4.0),
            Err(Error::NotSemipositive(_))
        ));
    }

    #[test]
    fn non_psh_profile_gets_finite_constants() {
        let g = ProductGrid::new(32, 32, 9, true).unwrap();
        let base = crate::model::make_degenerate_form(g, 4.0).unwrap();
        let zero = TorusField::constant(g, 0.0);
        let phi = Field::zeros(g);
        let m = make_singular_model(1.0, &base, &zero, &zero, &phi, 1.0, 4.0).unwrap();
        assert!(m.f.sup() <= 0.0);
        assert!(m.quasi_psh_c > 0.0 && m.quasi_psh_c.is_finite());
        assert!((m.b0 - 2.0 * m.quasi_psh_c).abs() < 1e-14);
        assert!(m
            .tilde_psi
            .values()
            .iter()
            .zip(m.psi.values())
            .all(|(a, b)| a <= b));
    }
}

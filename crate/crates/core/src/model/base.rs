use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{ProductGrid, TorusField};

/// Upper bound on `a`. With `eps <= 1` it keeps `a + 2 eps <= 4`, which is
/// what the obstacle comparison needs.
pub const A_MAX: f64 = 2.0;

/// Semipositive base form `alpha` on the product, pulled back from `T^2`.
///
/// In the reduced coordinates `alpha = a(x) dz dzbar`, and the reference
/// Kaehler form is `omega = dz dzbar + kappa e^{-2t} dw dwbar`.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseForm {
    a: TorusField,
    kappa: f64,
    eps_cap: f64,
}

impl BaseForm {
    pub fn new(a: TorusField, kappa: f64, eps_cap: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "kappa = {kappa} must be positive"
            )));
        }
        if !(eps_cap > 0.0 && eps_cap <= 1.0) {
            return Err(Error::InvalidModel(format!(
                "eps_cap = {eps_cap} must lie in (0, 1]"
            )));
        }
        if let Some(idx) = a.values().iter().position(|&v| !(v >= 0.0)) {
            return Err(Error::NotSemipositive(format!(
                "a = {} at node {}",
                a.values()[idx],
                a.grid().node(idx)
            )));
        }
        if let Some(idx) = a.values().iter().position(|&v| v > A_MAX + 1e-12) {
            return Err(Error::InvalidModel(format!(
                "a = {} exceeds {A_MAX} at node {}",
                a.values()[idx],
                a.grid().node(idx)
            )));
        }
        Ok(Self { a, kappa, eps_cap })
    }

    pub fn constant(grid: ProductGrid, a: f64, kappa: f64) -> Result<Self> {
        Self::new(TorusField::constant(grid, a), kappa, 1.0)
    }

    pub fn grid(&self) -> &ProductGrid {
        self.a.grid()
    }

    pub fn a(&self) -> &TorusField {
        &self.a
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn eps_cap(&self) -> f64 {
        self.eps_cap
    }

    /// `omega_{w wbar}` at height `t`.
    pub fn omega_ww(&self, t: f64) -> f64 {
        self.kappa * (-2.0 * t).exp()
    }
}

/// `a(x) = 1 - (lambda/8)(cos 2 pi x1 + cos 2 pi x2)`, degenerating at the
/// origin when `lambda = 4`.
pub fn make_degenerate_form(grid: ProductGrid, lambda: f64) -> Result<BaseForm> {
    if !(0.0..=4.0).contains(&lambda) {
        return Err(Error::NotSemipositive(format!(
            "lambda = {lambda} is outside [0, 4]"
        )));
    }
    let a = TorusField::from_fn(grid, |x1, x2| {
        let v = 1.0 - lambda / 8.0 * ((2.0 * PI * x1).cos() + (2.0 * PI * x2).cos());
        v.max(0.0)
    });
    BaseForm::new(a, 1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_zero_is_flat() {
        let g = ProductGrid::new(8, 8, 9, false).unwrap();
        let b = make_degenerate_form(g, 0.0).unwrap();
        assert!(b.a().values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn lambda_four_vanishes_at_origin() {
        let g = ProductGrid::new(8, 8, 9, false).unwrap();
        let b = make_degenerate_form(g, 4.0).unwrap();
        assert_eq!(b.a().at(0, 0), 0.0);
        assert!((b.a().at(4, 4) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_above_four_is_rejected() {
        let g = ProductGrid::new(8, 8, 9, false).unwrap();
        assert!(matches!(
            make_degenerate_form(g, 4.5),
            Err(Error::NotSemipositive(_))
        ));
    }

    #[test]
    fn negative_a_is_rejected() {
        let g = ProductGrid::new(8, 8, 9, false).unwrap();
        assert!(BaseForm::constant(g, -0.1, 1.0).is_err());
        assert!(BaseForm::constant(g, 1.0, 0.0).is_err());
    }
}

//! Named problem setups.
//!
//! | name                 | a(x)          | phi0 | phi1                      | psi        |
//! |----------------------|---------------|------|---------------------------|------------|
//! | `constants`          | 1             | 0    | c                         | bounded    |
//! | `smooth`             | 1             | 0    | cos(2 pi x1) / (4 pi^2)   | bounded    |
//! | `log-singular-c1`    | 1             | 0    | cone                      | c = 1 log  |
//! | `degenerate-lambda4` | sin^2 + sin^2 | 0    | cone                      | c = 1 log  |
//!
//! The cone is `sigma (sqrt(S) - sqrt(2))` with `S = sin^2(pi x1) + sin^2(pi x2)`,
//! Lipschitz with a conical point at the origin. Its Hessian grows like
//! `1/|x|`, so unweighted second derivatives blow up under refinement.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ProductGrid, TorusField};
use crate::model::family::{build_boundary_family, endpoint_subsolution, BoundaryFamily};
use crate::model::{make_degenerate_form, make_singular_model, BaseForm, SingularModel};

/// Amplitude of the smooth endpoint: a quarter of the largest amplitude for
/// which `cos(2 pi x1) A` is still psh against `a = 1`.
pub const SMOOTH_AMPLITUDE: f64 = 1.0 / (4.0 * PI * PI);

pub const CONE_SIGMA: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Constants { c: f64 },
    Smooth,
    LogSingularC1,
    DegenerateLambda4,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Constants { .. } => "constants",
            Preset::Smooth => "smooth",
            Preset::LogSingularC1 => "log-singular-c1",
            Preset::DegenerateLambda4 => "degenerate-lambda4",
        }
    }

    pub fn all() -> [Preset; 4] {
        [
            Preset::Constants { c: 1.0 },
            Preset::Smooth,
            Preset::LogSingularC1,
            Preset::DegenerateLambda4,
        ]
    }

    /// Whether the endpoints depend on `x1` only, so the Legendre oracle
    /// applies.
    pub fn is_x1_only(&self) -> bool {
        matches!(self, Preset::Constants { .. } | Preset::Smooth)
    }

    fn log_coefficient(&self) -> f64 {
        match self {
            Preset::Constants { .. } | Preset::Smooth => 0.0,
            Preset::LogSingularC1 | Preset::DegenerateLambda4 => 1.0,
        }
    }

    pub fn base(&self, grid: ProductGrid) -> Result<BaseForm> {
        match self {
            Preset::DegenerateLambda4 => make_degenerate_form(grid, 4.0),
            _ => BaseForm::constant(grid, 1.0, 1.0),
        }
    }

    pub fn endpoints(&self, grid: ProductGrid) -> (TorusField, TorusField) {
        let zero = TorusField::constant(grid, 0.0);
        let one = match *self {
            Preset::Constants { c } => TorusField::constant(grid, c),
            Preset::Smooth => {
                TorusField::from_fn(grid, |x1, _| SMOOTH_AMPLITUDE * (2.0 * PI * x1).cos())
            }
            Preset::LogSingularC1 | Preset::DegenerateLambda4 => cone(grid, CONE_SIGMA),
        };
        (zero, one)
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constants" => Ok(Preset::Constants { c: 1.0 }),
            "smooth" => Ok(Preset::Smooth),
            "log-singular-c1" => Ok(Preset::LogSingularC1),
            "degenerate-lambda4" => Ok(Preset::DegenerateLambda4),
            _ => {
                if let Some(c) = s.strip_prefix("constants:") {
                    let c = c.parse().map_err(|_| {
                        Error::InvalidInput(format!("bad constant in preset {s:?}"))
                    })?;
                    return Ok(Preset::Constants { c });
                }
                Err(Error::InvalidInput(format!(
                    "unknown preset {s:?}; expected constants[:C], smooth, log-singular-c1 or degenerate-lambda4"
                )))
            }
        }
    }
}

pub fn cone(grid: ProductGrid, sigma: f64) -> TorusField {
    TorusField::from_fn(grid, |x1, x2| {
        let s = (PI * x1).sin().powi(2) + (PI * x2).sin().powi(2);
        sigma * (s.sqrt() - 2f64.sqrt())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub delta: f64,
    pub beta0: f64,
    pub mask_radius_cells: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            delta: 1.0,
            beta0: 1.0,
            mask_radius_cells: 4.0,
        }
    }
}

/// Everything the solvers need for one preset on one grid.
#[derive(Clone, Debug)]
pub struct Problem {
    pub preset: Preset,
    pub base: BaseForm,
    pub model: SingularModel,
    pub family: BoundaryFamily,
}

impl Problem {
    pub fn grid(&self) -> &ProductGrid {
        self.base.grid()
    }
}

pub fn build_problem(
    preset: Preset,
    grid: ProductGrid,
    eps_list: &[f64],
    params: ModelParams,
) -> Result<Problem> {
    let base = preset.base(grid)?;
    let (phi0, phi1) = preset.endpoints(grid);
    let (_, phi) = endpoint_subsolution(&phi0, &phi1)?;
    let model = make_singular_model(
        preset.log_coefficient(),
        &base,
        &phi0,
        &phi1,
        &phi,
        params.delta,
        params.mask_radius_cells,
    )?;
    let family = build_boundary_family(&phi0, &phi1, &base, &model, eps_list, params.beta0)?;
    Ok(Problem {
        preset,
        base,
        model,
        family,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for p in Preset::all() {
            assert_eq!(p.name().parse::<Preset>().unwrap().name(), p.name());
        }
        assert_eq!(
            "constants:2.5".parse::<Preset>().unwrap(),
            Preset::Constants { c: 2.5 }
        );
        assert!("nope".parse::<Preset>().is_err());
    }

    #[test]
    fn every_preset_builds() {
        let g = ProductGrid::new(16, 16, 17, true).unwrap();
        for p in Preset::all() {
            let prob = build_problem(p, g, &[0.25, 0.125], ModelParams::default()).unwrap();
            assert!(prob.model.psi.values().iter().all(|v| v.is_finite()));
            for l in &prob.family.levels {
                assert!(l.key.c_achieved >= prob.model.c_pos, "{}", p.name());
            }
        }
    }
}

//! Inputs of the envelope problem on the model geometry.

mod annulus;
mod base;
pub mod family;
mod kahler;
pub mod presets;
mod regmax;
mod singular;

pub use annulus::{annulus_potential, annulus_potential_at};
pub use base::{make_degenerate_form, BaseForm, A_MAX};
pub use family::{build_boundary_family, BoundaryFamily, FamilyLevel, KeyPositivity};
pub use kahler::{solve_kahler_potential, KahlerNewton};
pub use presets::{
    build_problem, cone, ModelParams, Preset, Problem, CONE_SIGMA, SMOOTH_AMPLITUDE,
};
pub use regmax::{kernel, kernel_cdf, reg_max, reg_max_scalar, DEFAULT_SPREAD};
pub use singular::{log_model_raw, make_singular_model, SingularMask, SingularModel};

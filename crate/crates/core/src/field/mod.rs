//! Grids, scalar fields and finite-difference operators.

mod grid;
pub mod io;
mod stencil;
mod values;

pub use grid::{ProductGrid, MIN_TORUS_NODES, MIN_T_NODES};
pub use stencil::{
    derivative_norm, derivative_stats, hermitian_hessian, ma_density, Differ, HermitianFormField,
    Hessian,
};
pub use values::{Field, TorusField};

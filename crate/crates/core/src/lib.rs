//! Penalized Monge-Ampere continuation for plurisubharmonic envelopes and
//! geodesics on the model product `T^2 x [0,1]`.
//!
//! The pieces, bottom up: [`field`] holds grids, fields and stencils;
//! [`model`] builds base forms, singular weights and boundary families;
//! [`obstacle`] solves the linear Dirichlet problems for the obstacle and the
//! barrier; [`berman`] runs damped Newton with continuation in `beta`;
//! [`oracle`] computes reference geodesics by Legendre duality; [`harness`]
//! measures weighted estimates and persists runs.

pub mod berman;
pub mod error;
pub mod field;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod obstacle;
pub mod oracle;

#[cfg(test)]
mod proptests;

pub use error::{Error, NodeIndex, Result};

//! Numerical laboratory for the radial defocusing semilinear wave equation
//! ∂ₜ²φ − Δφ = −|φ|^{p−1}φ in three space dimensions.
//!
//! The crate evolves the equation forward from compactly supported data at
//! t = 1, maps solutions through the power-adapted conformal inversion onto
//! the backward light cone, evolves the transformed equation there, and
//! measures energies, light-cone fluxes, uniform bounds and decay rates.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod acceptance;
pub mod cli;
pub mod conformal;
pub mod diagnostics;
pub mod dual;
pub mod error;
pub mod grid;
pub mod quadrature;
pub mod solver;

pub use conformal::{alpha_p, ConformalChart, Region};
pub use error::{Error, Result};
pub use grid::{FieldKind, GridSpec, InitialDataSpec, SpacetimeField, TimeSlice};

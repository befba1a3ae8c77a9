//! Finite-element laboratory for the Robin problem
//! `−Δu + λu = f` in Ω, `∂u/∂ν + βu = 0` on ∂Ω, on the unit interval, square
//! and cube.
//!
//! The crate assembles P1 Galerkin systems, solves them with preconditioned
//! conjugate gradients, and measures how the sup-norm of the solution reacts
//! to changes of the boundary coefficient β. The [`stampacchia`] module holds
//! the level-set decay lemma used to control such differences.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod stampacchia;

pub use error::{Error, Result};

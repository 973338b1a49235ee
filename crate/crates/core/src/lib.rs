//! Finite element simulation of magnetoelastic Landau–Lifshitz–Gilbert dynamics
//! with a tangent-plane scheme for the magnetisation and an implicit
//! step for the displacement.

// Tensor code is written in index notation, and `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod integrator;
pub mod mesh;
pub mod output;
pub mod presets;
pub mod runner;
pub mod sparse;
pub mod tensor;
pub mod units;
pub mod vec3;
pub mod verify;

pub use error::{Error, Result};

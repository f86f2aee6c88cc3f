//! Numerics for modular (Musielak–Orlicz) function spaces and renormalized
//! solutions of monotone elliptic problems with integrable data.
//!
//! * [`nfunc`] evaluates N-functions, computes discrete Legendre–Fenchel
//!   conjugates and convex envelopes, and checks structural conditions.
//! * [`fields`] holds the grid, nodal/cellwise fields, modulars and norms.
//! * [`approx`] is the star-shaped mollification operator.
//! * [`poincare`] estimates the modular Poincaré constant.
//! * [`solver`] minimizes convex energies of truncated problems and runs the
//!   renormalized-solution diagnostics on the resulting sequence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod error;
pub mod fields;
pub mod nfunc;
pub mod poincare;
pub mod solver;

pub use error::{Error, Result};

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

//! Classical and quantum dynamics on Zoll surfaces.

pub mod error;
pub mod evolve;
pub mod geodesic;
pub mod geometry;
pub mod ode;
pub mod potential;
pub mod radon;
pub mod spectral;
pub mod verify;
pub mod zelditch;

pub use error::{Error, Result};

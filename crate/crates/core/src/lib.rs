//! Harmonic analysis on quadratic CR manifolds.

pub mod convex;
pub mod error;
pub mod fock;
pub mod io;
pub mod model;
pub mod quadrature;
pub mod rockland;
pub mod spectral;
pub mod split;
pub mod suites;
pub mod transform;

pub use error::{Error, Result};
pub use model::*;

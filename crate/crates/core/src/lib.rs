//! Compliance/volume-fraction Pareto fronts for 2D SIMP topology
//! optimization, their efficiency ratio, a two-parameter front meta-model,
//! and minimum-mass material selection under a deflection constraint.

pub mod er;
pub mod error;
pub mod fem2d;
pub mod materials;
pub mod metamodel;
pub mod pareto;
pub mod simp;
pub mod svg;

pub use error::{Error, Result};

//! Degree counting for the prescribed scalar curvature equation on S³.

pub mod critical;
pub mod curvature;
pub mod degree;
pub mod error;
pub mod geometry;
pub mod invariants;
pub mod problem;
pub mod pv;
pub mod quadrature;
pub mod reduction;
pub mod report;
pub mod selftest;
pub mod series;

pub use error::{Error, Result};

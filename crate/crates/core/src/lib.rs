//! Simplicial decomposition for dense convex quadratic programs with few
//! linear constraints.
//!
//! The solver alternates a master QP over the convex hull of generated
//! vertices with a linear pricing problem over the full polyhedron. Two
//! master solvers are provided (adaptive conjugate directions and a
//! nonmonotone projected gradient) together with several pricing options
//! (column sifting, early stopping, shrinking cuts).

pub mod bench;
pub mod error;
pub mod geometry;
pub mod instances;
pub mod linalg;
pub mod master;
pub mod oracle;
pub mod pricing;
pub mod problem;
pub mod sd;

pub use error::{Error, Result};
pub use problem::{Bounds, LinearRow, QpInstance};

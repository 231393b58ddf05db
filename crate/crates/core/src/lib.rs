//! Lowest-order finite element exterior calculus on simplicial meshes with
//! residual and local-problem a posteriori error estimators.

pub mod afem;
pub mod assembly;
pub mod solvers;
pub mod error;
pub mod estimators;
pub mod forms;
pub mod geometry;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod sparse;
pub mod spaces;

pub use error::{FeecError, Result};

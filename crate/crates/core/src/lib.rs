//! Ginzburg-Landau vortices on planar domains: energy minimization,
//! vortex asymptotics, renormalized energies and conformal frame flows.

pub mod checks;
pub mod conformal;
pub mod curves;
pub mod disk;
pub mod error;
pub mod fem;
pub mod frame;
pub mod gl;
pub mod mesh;
pub mod renorm;
pub mod pipeline;
pub mod svg;

pub use error::{Error, Result};

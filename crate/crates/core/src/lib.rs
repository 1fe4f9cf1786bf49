pub mod biot_savart;
pub mod error;
pub mod fields;
pub mod fit;
pub mod grid;
pub mod kernels;
pub mod linear;
pub mod nonlinear;
pub mod oracle;
pub mod params;
pub mod quadrature;

pub use error::{Error, Result};
pub use grid::{Interpolation, RadialGrid};
pub use params::{PhysParams, SolverParams};

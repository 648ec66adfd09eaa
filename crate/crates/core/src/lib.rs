//! Complex collective states of two two-level emitters coupled to a
//! one-dimensional field.

pub mod bounces;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod greens;
pub mod jet;
pub mod linalg;
pub mod output;
pub mod params;
pub mod quad;
pub mod sweep;
pub mod waveguide;

pub use error::{Error, Result};
pub use greens::ComplexEnergy;
pub use params::{Channel, ModelParams, SymmetrySector};
pub use quad::QuadratureSpec;

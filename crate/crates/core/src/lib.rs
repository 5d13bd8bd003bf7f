pub mod error;
pub mod model;
pub mod quadrature;
pub mod spectral;
pub mod dynamics;
pub mod bath_oracle;
pub mod cli;

pub use error::{Error, Result};

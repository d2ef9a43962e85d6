pub mod constants;
pub mod eigen;
pub mod error;
pub mod geometry;
pub mod hodge;
pub mod kato;
pub mod model;
pub mod operator;
pub mod quadrature;
pub mod report;
pub mod spectral;

pub use error::{Error, Result};

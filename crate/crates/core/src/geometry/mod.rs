//! Periodic metric tori: grids, analytic metric families, pointwise
//! curvature, volume and diameter.

pub mod diameter;
pub mod grid;
pub mod metric;
pub mod pointwise;
pub mod volume;

pub use diameter::{diameter_upper, DiameterEstimate, Stencil};
pub use grid::GridSpec;
pub use metric::{Bump, MetricFamily, MetricField, Profile, TrigTerm};
pub use pointwise::{geometry_at, pointwise_geometry, rho_field, Derivatives, PointGeometry};
pub use volume::VolumeForm;

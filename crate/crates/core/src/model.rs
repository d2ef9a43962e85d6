//! A discretized metric torus: everything the checks read off the geometry.

use crate::constants::SpectralParams;
use crate::error::Result;
use crate::geometry::volume::{negative_part, shifted_negative_part};
use crate::geometry::{diameter_upper, rho_field, DiameterEstimate, Derivatives, GridSpec, MetricFamily, MetricField, Stencil, VolumeForm};
use crate::operator::DiscreteOperator;
use crate::spectral::assemble_laplacian;

#[derive(Debug, Clone)]
pub struct Manifold {
    pub grid: GridSpec,
    pub metric: MetricField,
    /// Lowest Ricci eigenvalue at every node.
    pub rho: Vec<f64>,
    pub volume: VolumeForm,
    pub diameter: DiameterEstimate,
    pub laplacian: DiscreteOperator,
}

impl Manifold {
    pub fn build(family: MetricFamily, grid: GridSpec, stencil: Stencil) -> Result<Self> {
        let metric = MetricField::new(family, &grid)?;
        let rho = rho_field(&metric, &grid, Derivatives::Analytic)?;
        let laplacian = assemble_laplacian(&metric, &grid)?;
        let volume = VolumeForm::from_weights(laplacian.mass().to_vec());
        let diameter = diameter_upper(&metric, &grid, stencil);
        Ok(Manifold {
            grid,
            metric,
            rho,
            volume,
            diameter,
            laplacian,
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Parameters at this manifold's diameter estimate.
    pub fn params(&self, delta: f64, p: f64) -> SpectralParams {
        SpectralParams {
            p,
            ..SpectralParams::new(self.dim(), delta, self.diameter.value)
        }
    }

    pub fn rho_minus(&self) -> Vec<f64> {
        negative_part(&self.rho)
    }

    /// `W = (ρ − ρ₀)₋`.
    pub fn well(&self, rho0: f64) -> Vec<f64> {
        shifted_negative_part(&self.rho, rho0)
    }

    /// `L + ρ`.
    pub fn schrodinger(&self) -> Result<DiscreteOperator> {
        self.laplacian.with_potential(&self.rho)
    }
}

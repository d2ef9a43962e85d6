//! Christoffel symbols, Ricci tensor and the lowest Ricci eigenvalue `ρ`.
//!
//! Sign convention: `R_{jk} = ∂ᵢΓⁱ_{jk} − ∂ₖΓⁱ_{ji} + Γⁱ_{ip}Γᵖ_{jk} − Γⁱ_{kp}Γᵖ_{ji}`,
//! which is positive on round spheres. For a conformal metric `e^{2φ}δ` a
//! local maximum of `φ` therefore carries `ρ > 0`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::grid::GridSpec;
use super::metric::{MetricField, MetricJet};
use crate::error::{Error, Result};

/// How metric derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derivatives {
    /// Exact derivatives supplied by the metric family.
    Analytic,
    /// Second-order central differences with the given step.
    FiniteDifference(f64),
}

/// Riemannian quantities at one point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub sqrt_det_g: f64,
    /// `gamma[i][(j, k)] = Γⁱ_{jk}`
    pub gamma: Vec<DMatrix<f64>>,
    pub ricci: DMatrix<f64>,
    /// Smallest `ρ` with `Ric·v = ρ·g·v`.
    pub rho: f64,
}

impl PointGeometry {
    /// Ricci endomorphism `Rⁱⱼ = g^{ik}R_{kj}`.
    pub fn ricci_endomorphism(&self) -> DMatrix<f64> {
        &self.g_inv * &self.ricci
    }
}

pub fn geometry_at(metric: &MetricField, x: &[f64], mode: Derivatives) -> Result<PointGeometry> {
    let jet = match mode {
        Derivatives::Analytic => metric.analytic_jet(x),
        Derivatives::FiniteDifference(h) => metric.finite_difference_jet(x, h),
    };
    geometry_from_jet(&jet, x)
}

/// Geometry at grid node `index`.
pub fn pointwise_geometry(
    metric: &MetricField,
    grid: &GridSpec,
    index: usize,
    mode: Derivatives,
) -> Result<PointGeometry> {
    geometry_at(metric, &grid.coords(index), mode)
}

/// Christoffel symbols alone (first derivatives only).
pub fn christoffel(g_inv: &DMatrix<f64>, dg: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let d = g_inv.nrows();
    // lowered symbols Γ_{l,jk} = ½(∂ⱼg_{lk} + ∂ₖg_{lj} − ∂ₗg_{jk})
    let lowered = |l: usize, j: usize, k: usize| 0.5 * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]);
    (0..d)
        .map(|i| {
            DMatrix::from_fn(d, d, |j, k| (0..d).map(|l| g_inv[(i, l)] * lowered(l, j, k)).sum())
        })
        .collect()
}

pub fn geometry_from_jet(jet: &MetricJet, x: &[f64]) -> Result<PointGeometry> {
    let d = jet.g.nrows();
    let chol = jet
        .g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite { point: x.to_vec() })?;
    let g_inv = chol.inverse();
    let sqrt_det_g = chol.l_dirty().diagonal().iter().product::<f64>().abs();
    let gamma = christoffel(&g_inv, &jet.dg);

    // ∂ₘΓⁱ_{jk} = ½∂ₘg^{il}(…) + ½g^{il}∂ₘ(…), with ∂ₘg⁻¹ = −g⁻¹(∂ₘg)g⁻¹
    let dgamma: Vec<Vec<DMatrix<f64>>> = (0..d)
        .map(|m| {
            let dginv = -(&g_inv * &jet.dg[m] * &g_inv);
            (0..d)
                .map(|i| {
                    DMatrix::from_fn(d, d, |j, k| {
                        (0..d)
                            .map(|l| {
                                let first = 0.5 * (jet.dg[j][(l, k)] + jet.dg[k][(l, j)] - jet.dg[l][(j, k)]);
                                let second = 0.5
                                    * (jet.d2g[m][j][(l, k)] + jet.d2g[m][k][(l, j)] - jet.d2g[m][l][(j, k)]);
                                dginv[(i, l)] * first + g_inv[(i, l)] * second
                            })
                            .sum()
                    })
                })
                .collect()
        })
        .collect();

    let mut ricci = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let mut r = 0.0;
            for i in 0..d {
                r += dgamma[i][i][(j, k)] - dgamma[k][i][(j, i)];
                for p in 0..d {
                    r += gamma[i][(i, p)] * gamma[p][(j, k)] - gamma[i][(k, p)] * gamma[p][(j, i)];
                }
            }
            ricci[(j, k)] = r;
        }
    }
    let ricci = 0.5 * (&ricci + ricci.transpose());

    // ρ from L⁻¹·Ric·L⁻ᵀ with g = LLᵀ
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite { point: x.to_vec() })?;
    let reduced = &l_inv * &ricci * l_inv.transpose();
    let reduced = 0.5 * (&reduced + reduced.transpose());
    let rho = SymmetricEigen::new(reduced)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    Ok(PointGeometry {
        g: jet.g.clone(),
        g_inv,
        sqrt_det_g,
        gamma,
        ricci,
        rho,
    })
}

/// `ρ` at every grid node, in node order.
pub fn rho_field(metric: &MetricField, grid: &GridSpec, mode: Derivatives) -> Result<Vec<f64>> {
    (0..grid.len())
        .map(|i| pointwise_geometry(metric, grid, i, mode).map(|pg| pg.rho))
        .collect()
}

//! Riemannian volume weights and `L^p` means.

use super::grid::GridSpec;
use super::metric::MetricField;
use crate::error::{Error, Result};

/// Lumped volume weights `w_x = √det g(x)·∏ᵢ Lᵢ/nᵢ`.
///
/// Sums run in node order so results are reproducible bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeForm {
    weights: Vec<f64>,
    total: f64,
}

impl VolumeForm {
    pub fn new(metric: &MetricField, grid: &GridSpec) -> Result<Self> {
        let cell = grid.cell_volume();
        let weights = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                let diag = metric.diagonal(&x);
                if diag.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                    return Err(Error::NotPositiveDefinite { point: x });
                }
                Ok(diag.iter().product::<f64>().sqrt() * cell)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VolumeForm::from_weights(weights))
    }

    pub fn from_weights(weights: Vec<f64>) -> Self {
        let total = weights.iter().sum();
        VolumeForm { weights, total }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.weights.len() {
            return Err(Error::Shape {
                expected: self.weights.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// `∫ f dvol`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check(f)?;
        Ok(self.weights.iter().zip(f).map(|(w, v)| w * v).sum())
    }

    /// `⫶f⫶_p = (Vol⁻¹ ∫|f|^p)^{1/p}`; `p = ∞` gives `max |f|`.
    pub fn lp_mean(&self, f: &[f64], p: f64) -> Result<f64> {
        self.check(f)?;
        if !(p >= 1.0) {
            return Err(crate::error::domain("L^p mean", "p >= 1", format!("p = {p}")));
        }
        if p.is_infinite() {
            return Ok(f.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Ok(0.0);
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * (v.abs() / scale).powf(p))
            .sum();
        Ok(scale * (s / self.total).powf(1.0 / p))
    }

    /// `‖f‖_{L^p}` without normalization.
    pub fn lp_norm(&self, f: &[f64], p: f64) -> Result<f64> {
        if p.is_infinite() {
            return self.lp_mean(f, p);
        }
        Ok(self.lp_mean(f, p)? * self.total.powf(1.0 / p))
    }

    pub fn inner(&self, f: &[f64], h: &[f64]) -> Result<f64> {
        self.check(f)?;
        self.check(h)?;
        Ok(self.weights.iter().zip(f).zip(h).map(|((w, a), b)| w * a * b).sum())
    }
}

/// Negative part `max(−f, 0)`.
pub fn negative_part(f: &[f64]) -> Vec<f64> {
    f.iter().map(|&v| (-v).max(0.0)).collect()
}

/// `(ρ − ρ₀)₋` at every node.
pub fn shifted_negative_part(rho: &[f64], rho0: f64) -> Vec<f64> {
    rho.iter().map(|&v| (rho0 - v).max(0.0)).collect()
}

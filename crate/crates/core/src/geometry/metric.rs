//! Analytic periodic metric families.
//!
//! Every family is diagonal in the coordinate frame: `FLAT` (`g = I`),
//! `CONFORMAL` (`g = e^{2φ}I`) and `DIAGONAL` (`gᵢᵢ = e^{2ψᵢ}`), where the
//! log-scales are [`Profile`]s: sums of a constant, cosine modes and
//! periodic Gaussian bumps. Profiles carry exact first and second
//! derivatives.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::error::{Error, Result};

/// `amplitude·cos(2π Σᵢ kᵢxᵢ/Lᵢ + phase)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub wavevector: Vec<i32>,
    #[serde(default)]
    pub phase: f64,
}

/// Periodic Gaussian bump of width `σ` centred at `c`:
/// `amplitude·exp(Σᵢ κᵢ(cos(2π(xᵢ−cᵢ)/Lᵢ) − 1))` with `κᵢ = (Lᵢ/2πσ)²`,
/// which agrees with `amplitude·exp(−|x−c|²/2σ²)` to leading order near `c`.
///
/// A positive amplitude curves the metric like a round sphere at the centre
/// (`ρ > 0` there); a negative amplitude digs a negative-curvature well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
}

/// Smooth periodic scalar function with analytic derivatives.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub trig: Vec<TrigTerm>,
    #[serde(default)]
    pub bumps: Vec<Bump>,
}

/// Value, gradient and Hessian of a scalar at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

impl Profile {
    pub fn constant(c: f64) -> Self {
        Profile {
            constant: c,
            ..Profile::default()
        }
    }

    pub fn bump(amplitude: f64, width: f64, center: Vec<f64>) -> Self {
        Profile {
            bumps: vec![Bump {
                amplitude,
                width,
                center,
            }],
            ..Profile::default()
        }
    }

    pub fn is_constant(&self) -> bool {
        self.trig.iter().all(|t| t.amplitude == 0.0 || t.wavevector.iter().all(|&k| k == 0))
            && self.bumps.iter().all(|b| b.amplitude == 0.0)
    }

    /// All non-constant amplitudes multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.trig.iter_mut().for_each(|t| t.amplitude *= s);
        out.bumps.iter_mut().for_each(|b| b.amplitude *= s);
        out
    }

    fn validate(&self, d: usize) -> Result<()> {
        for t in &self.trig {
            if t.wavevector.len() != d {
                return Err(Error::InvalidMetric(format!(
                    "wavevector {:?} has the wrong dimension (expected {d})",
                    t.wavevector
                )));
            }
        }
        for b in &self.bumps {
            if b.center.len() != d {
                return Err(Error::InvalidMetric(format!(
                    "bump center {:?} has the wrong dimension (expected {d})",
                    b.center
                )));
            }
            if !(b.width > 0.0) {
                return Err(Error::InvalidMetric(format!("bump width {} must be > 0", b.width)));
            }
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64], periods: &[f64]) -> f64 {
        let mut v = self.constant;
        for t in &self.trig {
            v += t.amplitude * trig_phase(t, x, periods).cos();
        }
        for b in &self.bumps {
            v += b.amplitude * bump_exponent(b, x, periods).exp();
        }
        v
    }

    pub fn jet(&self, x: &[f64], periods: &[f64]) -> Jet {
        let d = x.len();
        let mut value = self.constant;
        let mut grad = vec![0.0; d];
        let mut hess = DMatrix::zeros(d, d);
        for t in &self.trig {
            let theta = trig_phase(t, x, periods);
            let omega: Vec<f64> = (0..d).map(|i| 2.0 * PI * t.wavevector[i] as f64 / periods[i]).collect();
            let (s, c) = theta.sin_cos();
            value += t.amplitude * c;
            for i in 0..d {
                grad[i] -= t.amplitude * s * omega[i];
                for j in 0..d {
                    hess[(i, j)] -= t.amplitude * c * omega[i] * omega[j];
                }
            }
        }
        for b in &self.bumps {
            let e = b.amplitude * bump_exponent(b, x, periods).exp();
            let mut ds = vec![0.0; d];
            let mut dds = vec![0.0; d];
            for i in 0..d {
                let nu = 2.0 * PI / periods[i];
                let kappa = (periods[i] / (2.0 * PI * b.width)).powi(2);
                let (s, c) = (nu * (x[i] - b.center[i])).sin_cos();
                ds[i] = -kappa * nu * s;
                dds[i] = -kappa * nu * nu * c;
            }
            value += e;
            for i in 0..d {
                grad[i] += e * ds[i];
                for j in 0..d {
                    let diag = if i == j { dds[i] } else { 0.0 };
                    hess[(i, j)] += e * (ds[i] * ds[j] + diag);
                }
            }
        }
        Jet { value, grad, hess }
    }
}

fn trig_phase(t: &TrigTerm, x: &[f64], periods: &[f64]) -> f64 {
    t.phase
        + x.iter()
            .zip(periods)
            .zip(&t.wavevector)
            .map(|((xi, li), &k)| 2.0 * PI * k as f64 * xi / li)
            .sum::<f64>()
}

fn bump_exponent(b: &Bump, x: &[f64], periods: &[f64]) -> f64 {
    x.iter()
        .zip(periods)
        .zip(&b.center)
        .map(|((xi, li), ci)| {
            let kappa = (li / (2.0 * PI * b.width)).powi(2);
            kappa * ((2.0 * PI * (xi - ci) / li).cos() - 1.0)
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MetricFamily {
    Flat,
    /// `g = e^{2φ}·I`
    Conformal { profile: Profile },
    /// `gᵢᵢ = e^{2ψᵢ}`, one profile per axis.
    Diagonal { profiles: Vec<Profile> },
}

impl MetricFamily {
    pub fn name(&self) -> &'static str {
        match self {
            MetricFamily::Flat => "flat",
            MetricFamily::Conformal { .. } => "conformal",
            MetricFamily::Diagonal { .. } => "diagonal",
        }
    }
}

/// Metric `g`, its first derivatives `∂ₖg` and second derivatives `∂ₖ∂ₗg`
/// at one point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub d2g: Vec<Vec<DMatrix<f64>>>,
}

/// A metric family bound to the periods of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    family: MetricFamily,
    periods: Vec<f64>,
}

impl MetricField {
    pub fn new(family: MetricFamily, grid: &GridSpec) -> Result<Self> {
        let d = grid.dim();
        match &family {
            MetricFamily::Flat => {}
            MetricFamily::Conformal { profile } => profile.validate(d)?,
            MetricFamily::Diagonal { profiles } => {
                if profiles.len() != d {
                    return Err(Error::InvalidMetric(format!(
                        "diagonal family needs {d} profiles, got {}",
                        profiles.len()
                    )));
                }
                for p in profiles {
                    p.validate(d)?;
                }
            }
        }
        Ok(MetricField {
            family,
            periods: grid.periods().to_vec(),
        })
    }

    pub fn flat(grid: &GridSpec) -> Self {
        MetricField {
            family: MetricFamily::Flat,
            periods: grid.periods().to_vec(),
        }
    }

    pub fn family(&self) -> &MetricFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    /// True when `g` is the same at every point.
    pub fn is_translation_invariant(&self) -> bool {
        match &self.family {
            MetricFamily::Flat => true,
            MetricFamily::Conformal { profile } => profile.is_constant(),
            MetricFamily::Diagonal { profiles } => profiles.iter().all(Profile::is_constant),
        }
    }

    /// Diagonal entries `gᵢᵢ(x)`.
    pub fn diagonal(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        match &self.family {
            MetricFamily::Flat => vec![1.0; d],
            MetricFamily::Conformal { profile } => {
                vec![(2.0 * profile.value(x, &self.periods)).exp(); d]
            }
            MetricFamily::Diagonal { profiles } => profiles
                .iter()
                .map(|p| (2.0 * p.value(x, &self.periods)).exp())
                .collect(),
        }
    }

    pub fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.diagonal(x)))
    }

    /// Exact derivatives from the profiles' jets.
    pub fn analytic_jet(&self, x: &[f64]) -> MetricJet {
        let d = self.dim();
        let flat = Profile::default();
        let profile_for = |axis: usize| -> &Profile {
            match &self.family {
                MetricFamily::Flat => &flat,
                MetricFamily::Conformal { profile } => profile,
                MetricFamily::Diagonal { profiles } => &profiles[axis],
            }
        };
        let mut g = DMatrix::zeros(d, d);
        let mut dg = vec![DMatrix::zeros(d, d); d];
        let mut d2g = vec![vec![DMatrix::zeros(d, d); d]; d];
        let shared = matches!(self.family, MetricFamily::Conformal { .. } | MetricFamily::Flat)
            .then(|| profile_for(0).jet(x, &self.periods));
        for axis in 0..d {
            let jet = match &shared {
                Some(j) => j.clone(),
                None => profile_for(axis).jet(x, &self.periods),
            };
            // entry e^{2u}: ∂ₖ = 2uₖe^{2u}, ∂ₖ∂ₗ = (4uₖuₗ + 2uₖₗ)e^{2u}
            let e = (2.0 * jet.value).exp();
            g[(axis, axis)] = e;
            for k in 0..d {
                dg[k][(axis, axis)] = 2.0 * jet.grad[k] * e;
                for l in 0..d {
                    d2g[k][l][(axis, axis)] =
                        (4.0 * jet.grad[k] * jet.grad[l] + 2.0 * jet.hess[(k, l)]) * e;
                }
            }
        }
        MetricJet { g, dg, d2g }
    }

    /// Second-order central differences of `g` with step `h`.
    pub fn finite_difference_jet(&self, x: &[f64], h: f64) -> MetricJet {
        let d = self.dim();
        let at = |offsets: &[(usize, f64)]| {
            let mut y = x.to_vec();
            for &(axis, s) in offsets {
                y[axis] += s * h;
            }
            self.metric(&y)
        };
        let g = self.metric(x);
        let mut dg = Vec::with_capacity(d);
        let mut d2g = vec![vec![DMatrix::zeros(d, d); d]; d];
        for k in 0..d {
            let plus = at(&[(k, 1.0)]);
            let minus = at(&[(k, -1.0)]);
            dg.push((&plus - &minus) / (2.0 * h));
            d2g[k][k] = (&plus - &g * 2.0 + &minus) / (h * h);
            for l in 0..k {
                let mixed = (at(&[(k, 1.0), (l, 1.0)]) - at(&[(k, 1.0), (l, -1.0)])
                    - at(&[(k, -1.0), (l, 1.0)])
                    + at(&[(k, -1.0), (l, -1.0)]))
                    / (4.0 * h * h);
                d2g[k][l] = mixed.clone();
                d2g[l][k] = mixed;
            }
        }
        MetricJet { g, dg, d2g }
    }
}

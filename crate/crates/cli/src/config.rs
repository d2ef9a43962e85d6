//! Run configuration: TOML in, validated before any computation.

use std::f64::consts::PI;
use std::path::Path;

use katobound::geometry::{Bump, GridSpec, MetricFamily, MetricField, Profile, Stencil};
use katobound::kato::LambdaScan;
use katobound::report::AdmissibilityMode;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Largest Hodge system (`d·N` unknowns) solved densely.
pub const HODGE_LIMIT: usize = 12_288;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: ManifoldConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub metric: MetricFamily,
    /// Nodes per axis.
    pub n: usize,
    #[serde(default = "default_dim")]
    pub d: usize,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_stencil")]
    pub stencil: Stencil,
}

fn default_dim() -> usize {
    3
}

fn default_period() -> f64 {
    2.0 * PI
}

fn default_stencil() -> Stencil {
    Stencil::Face
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let s = LambdaScan::default();
        ScanConfig {
            lo: s.lo,
            hi: s.hi,
            count: s.count,
        }
    }
}

impl From<ScanConfig> for LambdaScan {
    fn from(s: ScanConfig) -> Self {
        LambdaScan {
            lo: s.lo,
            hi: s.hi,
            count: s.count,
        }
    }
}

/// Shape of the synthetic curvature well `ρ − ε·bump` used by the
/// `well_depth` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellShape {
    pub width: f64,
    /// Constant added to `ρ` before the well is dug.
    #[serde(default = "default_floor")]
    pub floor: f64,
    /// Defaults to the centre of the torus.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
}

fn default_floor() -> f64 {
    1.0
}

impl Default for WellShape {
    fn default() -> Self {
        WellShape {
            width: 0.9,
            floor: default_floor(),
            center: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub delta: f64,
    pub p: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub rho0: f64,
    pub t_samples: Vec<f64>,
    pub kprime: f64,
    pub admissibility: AdmissibilityMode,
    /// Fixed level for the curvature condition; scanned when absent.
    pub lambda: Option<f64>,
    pub lambda_scan: ScanConfig,
    pub positivity: bool,
    pub l1: bool,
    pub ultracontractivity: bool,
    /// Exponents of the `L^p → L^∞` check; `inf` allowed.
    pub p_values: Vec<f64>,
    pub hodge: bool,
    pub gap_tol: f64,
    /// `C` in the `C·h²` slack granted to the domination check on curved
    /// metrics.
    pub domination_constant: f64,
    /// Extra random bump potentials for the Kato checks.
    pub random_potentials: usize,
    /// Seed of the random potentials.
    pub seed: u64,
    pub well: WellShape,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            delta: 4.0,
            p: 4.0,
            alphas: vec![0.5, 1.0, 2.0, 4.0],
            betas: vec![0.5, 1.0],
            rho0: 0.5,
            t_samples: vec![0.05, 0.1, 0.25, 0.5, 0.75, 1.0],
            kprime: 1.0,
            admissibility: AdmissibilityMode::Weak,
            lambda: None,
            lambda_scan: ScanConfig::default(),
            positivity: true,
            l1: true,
            ultracontractivity: true,
            p_values: vec![1.0, 2.0, f64::INFINITY],
            hodge: true,
            gap_tol: 0.1,
            domination_constant: 2e-3,
            random_potentials: 0,
            seed: 0,
            well: WellShape::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Multiplies every non-constant amplitude of the metric profiles.
    Epsilon,
    Alpha,
    Beta,
    Rho0,
    Kprime,
    Delta,
    P,
    /// Depth `ε` of the synthetic well `ρ − ε·bump`.
    WellDepth,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Epsilon => "epsilon",
            SweepParameter::Alpha => "alpha",
            SweepParameter::Beta => "beta",
            SweepParameter::Rho0 => "rho0",
            SweepParameter::Kprime => "kprime",
            SweepParameter::Delta => "delta",
            SweepParameter::P => "p",
            SweepParameter::WellDepth => "well_depth",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    #[serde(default)]
    pub values: Vec<f64>,
    /// Bisection width for the threshold bracket, relative to the value
    /// range.
    #[serde(default = "default_bracket_width")]
    pub bracket_width: f64,
}

fn default_bracket_width() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    /// Whitespace-separated columns for gnuplot.
    Dat,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".to_string(),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn fail(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn require(cond: bool, msg: &str) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(fail(msg))
    }
}

fn all_positive(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite() && *v > 0.0)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| fail(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Serialize(e.to_string()))
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        GridSpec::cubic(self.manifold.d, self.manifold.n, self.manifold.period).map_err(|e| fail(format!("manifold: {e}")))
    }

    /// Checks every precondition; the error names the first that fails.
    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.manifold;
        let a = &self.analysis;
        require(m.d >= 3, "manifold.d must be >= 3")?;
        require(m.n >= 8, "manifold.n must be >= 8")?;
        require(m.period.is_finite() && m.period > 0.0, "manifold.period must be > 0")?;
        let grid = self.grid()?;
        MetricField::new(m.metric.clone(), &grid).map_err(|e| fail(format!("manifold.metric: {e}")))?;
        require(a.delta.is_finite() && a.delta > m.d as f64, "analysis.delta must satisfy delta > d")?;
        require(a.p.is_finite() && a.delta < 2.0 * a.p, "analysis.p must satisfy delta < 2p")?;
        require(!a.alphas.is_empty() && all_positive(&a.alphas), "analysis.alphas must be nonempty and > 0")?;
        require(!a.betas.is_empty() && all_positive(&a.betas), "analysis.betas must be nonempty and > 0")?;
        require(a.rho0.is_finite() && a.rho0 > 0.0, "analysis.rho0 must be > 0")?;
        require(
            !a.t_samples.is_empty() && all_positive(&a.t_samples),
            "analysis.t_samples must be nonempty and > 0",
        )?;
        require(a.kprime.is_finite() && a.kprime > 0.0, "analysis.kprime must be > 0")?;
        if let Some(l) = a.lambda {
            require(l.is_finite() && l > 0.0, "analysis.lambda must be > 0")?;
        }
        let s = &a.lambda_scan;
        require(
            s.lo > 0.0 && s.hi >= s.lo && s.hi.is_finite() && s.count >= 1,
            "analysis.lambda_scan must satisfy 0 < lo <= hi and count >= 1",
        )?;
        require(a.p_values.iter().all(|&p| p >= 1.0), "analysis.p_values must be >= 1")?;
        require(a.gap_tol.is_finite() && a.gap_tol > 0.0, "analysis.gap_tol must be > 0")?;
        require(
            a.domination_constant.is_finite() && a.domination_constant >= 0.0,
            "analysis.domination_constant must be >= 0",
        )?;
        require(
            a.well.width.is_finite() && a.well.width > 0.0,
            "analysis.well.width must be > 0",
        )?;
        require(a.well.floor.is_finite(), "analysis.well.floor must be finite")?;
        if let Some(c) = &a.well.center {
            require(c.len() == m.d, "analysis.well.center must have d coordinates")?;
        }
        if a.hodge {
            require(
                m.d * grid.len() <= HODGE_LIMIT,
                "analysis.hodge requires d * nodes <= 12288 (disable it or use a coarser grid)",
            )?;
        }
        require(!self.output.directory.is_empty(), "output.directory must be nonempty")?;
        if let Some(sw) = &self.sweep {
            require(sw.values.iter().all(|v| v.is_finite()), "sweep.values must be finite")?;
            require(
                sw.bracket_width > 0.0 && sw.bracket_width < 1.0,
                "sweep.bracket_width must be in (0, 1)",
            )?;
            if sw.parameter == SweepParameter::Epsilon {
                require(
                    !matches!(m.metric, MetricFamily::Flat),
                    "sweep.parameter = epsilon needs a non-flat metric family",
                )?;
            }
            for &v in &sw.values {
                let point = self.at(sw.parameter, v);
                let mut inner = point.clone();
                inner.sweep = None;
                inner
                    .validate()
                    .map_err(|e| fail(format!("sweep value {} = {v}: {e}", sw.parameter.as_str())))?;
            }
        }
        Ok(())
    }

    /// The configuration at one sweep value.
    pub fn at(&self, parameter: SweepParameter, value: f64) -> RunConfig {
        let mut c = self.clone();
        let a = &mut c.analysis;
        match parameter {
            SweepParameter::Epsilon => c.manifold.metric = scale_family(&self.manifold.metric, value),
            SweepParameter::Alpha => a.alphas = vec![value],
            SweepParameter::Beta => a.betas = vec![value],
            SweepParameter::Rho0 => a.rho0 = value,
            SweepParameter::Kprime => a.kprime = value,
            SweepParameter::Delta => a.delta = value,
            SweepParameter::P => a.p = value,
            SweepParameter::WellDepth => {}
        }
        c
    }

    /// Synthetic well profile `bump` with unit amplitude.
    pub fn well_bump(&self) -> Bump {
        let center = self
            .analysis
            .well
            .center
            .clone()
            .unwrap_or_else(|| vec![0.5 * self.manifold.period; self.manifold.d]);
        Bump {
            amplitude: 1.0,
            width: self.analysis.well.width,
            center,
        }
    }
}

pub fn scale_family(family: &MetricFamily, s: f64) -> MetricFamily {
    match family {
        MetricFamily::Flat => MetricFamily::Flat,
        MetricFamily::Conformal { profile } => MetricFamily::Conformal {
            profile: profile.scaled(s),
        },
        MetricFamily::Diagonal { profiles } => MetricFamily::Diagonal {
            profiles: profiles.iter().map(|p| p.scaled(s)).collect(),
        },
    }
}

/// Conformal bump `e^{2εφ}` with unit-amplitude `φ` centred on the torus.
pub fn conformal_bump(d: usize, period: f64, width: f64, epsilon: f64) -> MetricFamily {
    MetricFamily::Conformal {
        profile: Profile::bump(epsilon, width, vec![0.5 * period; d]),
    }
}

impl RunConfig {
    /// The flat torus at `n³` with default analysis.
    pub fn flat(n: usize) -> Self {
        RunConfig {
            manifold: ManifoldConfig {
                metric: MetricFamily::Flat,
                n,
                d: 3,
                period: default_period(),
                stencil: default_stencil(),
            },
            analysis: AnalysisConfig::default(),
            sweep: None,
            output: OutputConfig::default(),
        }
    }
}

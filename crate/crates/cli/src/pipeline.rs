//! The `verify` and `sweep` pipelines.

use std::collections::BTreeMap;
use std::time::Instant;

use katobound::constants::{
    eval_bkato_bound_rhs, eval_er_threshold, eval_gallot_rhs, eval_kato_bound_rhs, SpectralParams,
};
use katobound::eigen::{eigendecompose, EigenOptions, SpectralDecomposition};
use katobound::hodge::{
    assemble_hodge1, check_betti_bounds, check_domination, check_trace_comparison, check_vanishing_contrapositive,
    harmonic_dim, HodgeOperator,
};
use katobound::kato::{
    bisect, c_kato_numeric, check_admissibility, check_bkato_bound, check_heat_kernel_bound, check_kato_bound,
    check_kato_relation, check_l1_l1, check_positivity, check_ultracontractivity, check_vanishing_criterion,
    gallot_lhs, min_eigenvalue, STRICT_TOL, random_bump_potentials, sample_profile, Bracket, LambdaScan, ReportContext,
    VanishingInputs,
};
use katobound::model::Manifold;
use katobound::report::{
    sort_reports, AdmissibilityMode, AdmissibilityReport, BoundName, BoundReport, Relation, Verdict,
};
use katobound::spectral::t_min;
use katobound::geometry::Profile;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, SweepParameter};
use crate::error::CliError;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Number of lowest Hodge eigenvalues echoed in the manifest.
const HODGE_ECHO: usize = 8;

/// Slack of the domination check on translation-invariant metrics, where it
/// is exact up to rounding.
const FLAT_DOMINATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct ManifoldSummary {
    pub family: String,
    pub d: usize,
    pub n: usize,
    pub period: f64,
    pub nodes: usize,
    pub spacing: f64,
    pub volume: f64,
    pub diameter: f64,
    pub diameter_anisotropy: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub t_min: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Observables {
    pub rho_minus_mean_p: f64,
    pub rho_minus_mean_half_delta: f64,
    pub well_mean_p: f64,
    pub c_kato_well: f64,
    pub c_kato_well_rhs: f64,
    /// `b_Kato(ρ₋, β)` at each configured `β`, in order.
    pub b_kato_rho_minus: Vec<f64>,
    pub b_kato_rho_minus_rhs: Vec<f64>,
    pub min_eig_schrodinger: f64,
    pub min_eig_shifted: Option<f64>,
    pub vanishing_threshold: f64,
    pub vanishing_threshold_auto_delta: f64,
    pub harmonic_dim: Option<usize>,
    pub harmonic_raw_count: Option<usize>,
    pub harmonic_gap_factor: Option<f64>,
    pub hodge_lowest: Vec<f64>,
    pub domination_slack: Option<f64>,
    pub betti_bound: Option<f64>,
    pub betti_bound_lp: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub verified: usize,
    pub violated: usize,
    pub skipped: usize,
}

impl Counts {
    fn add(&mut self, v: &Verdict) {
        match v {
            Verdict::Verified => self.verified += 1,
            Verdict::Violated => self.violated += 1,
            Verdict::Skipped(_) => self.skipped += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: Counts,
    pub by_check: BTreeMap<String, Counts>,
}

impl Summary {
    pub fn of(reports: &[BoundReport]) -> Self {
        let mut s = Summary::default();
        for r in reports {
            s.total.add(&r.verdict);
            s.by_check.entry(r.name.as_str().to_string()).or_default().add(&r.verdict);
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub artifact_version: &'static str,
    pub config: RunConfig,
    pub manifold: ManifoldSummary,
    pub admissibility: Vec<AdmissibilityReport>,
    pub observables: Observables,
    pub summary: Summary,
    pub reports: Vec<BoundReport>,
}

impl Manifest {
    pub fn violated(&self) -> bool {
        self.summary.total.violated > 0
    }
}

/// Wall-clock per phase, kept out of the manifest.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub phases: Vec<(String, f64)>,
}

impl Timing {
    fn lap(&mut self, name: &str, start: &mut Instant) {
        self.phases.push((name.to_string(), start.elapsed().as_secs_f64()));
        *start = Instant::now();
    }

    pub fn total(&self) -> f64 {
        self.phases.iter().map(|(_, s)| s).sum()
    }
}

pub struct Outcome {
    pub manifest: Manifest,
    pub timing: Timing,
}

fn admission_for(manifold: &Manifold, cfg: &RunConfig) -> Result<Vec<AdmissibilityReport>, CliError> {
    let a = &cfg.analysis;
    let weak = check_admissibility(manifold, a.delta, AdmissibilityMode::Weak, None, a.lambda_scan.into())?;
    let mut out = vec![weak];
    if a.admissibility == AdmissibilityMode::Gallot {
        out.push(check_admissibility(
            manifold,
            a.delta,
            AdmissibilityMode::Gallot,
            a.lambda,
            a.lambda_scan.into(),
        )?);
    }
    Ok(out)
}

/// The smallest `lhs/rhs` of the configured admissibility condition: the
/// manifold is admitted iff it is at most 1.
pub fn admission_ratio(manifold: &Manifold, cfg: &RunConfig) -> Result<f64, CliError> {
    let a = &cfg.analysis;
    match a.admissibility {
        AdmissibilityMode::Weak => {
            let r = check_admissibility(manifold, a.delta, AdmissibilityMode::Weak, None, a.lambda_scan.into())?;
            Ok(r.lhs / r.rhs)
        }
        AdmissibilityMode::Gallot => {
            let lambdas = match a.lambda {
                Some(l) => vec![l],
                None => LambdaScan::from(a.lambda_scan).values(),
            };
            let base = manifold.params(a.delta, a.p);
            let mut best = f64::INFINITY;
            for lambda in lambdas {
                let lhs = gallot_lhs(&manifold.volume, &manifold.rho, manifold.dim(), a.delta, lambda)?;
                let rhs = eval_gallot_rhs(&SpectralParams { lambda, ..base })?;
                best = best.min(lhs / rhs);
            }
            Ok(best)
        }
    }
}

/// `ω = Σⱼ (cos(2πxⱼ₊₁/L) + ½) dxʲ`, a form with nonconstant pointwise norm.
fn fourier_form(manifold: &Manifold) -> Vec<f64> {
    let d = manifold.dim();
    let grid = &manifold.grid;
    let mut out = vec![0.0; grid.len() * d];
    for i in 0..grid.len() {
        let x = grid.coords(i);
        for j in 0..d {
            let k = (j + 1) % d;
            out[i * d + j] = (2.0 * std::f64::consts::PI * x[k] / grid.periods()[k]).cos() + 0.5;
        }
    }
    out
}

fn coordinate_form(nodes: usize, d: usize, j: usize) -> Vec<f64> {
    (0..nodes * d).map(|i| if i % d == j { 1.0 } else { 0.0 }).collect()
}

fn labeled(reports: Vec<BoundReport>, label: &str) -> Vec<BoundReport> {
    reports.into_iter().map(|r| r.labeled(label)).collect()
}

struct Potential {
    label: String,
    values: Vec<f64>,
}

/// Runs every check on one configuration.
pub fn analyze(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut timing = Timing::default();
    let mut clock = Instant::now();
    let a = &cfg.analysis;
    let grid = cfg.grid()?;
    let manifold = Manifold::build(cfg.manifold.metric.clone(), grid.clone(), cfg.manifold.stencil)?;
    let d = manifold.dim();
    let params = SpectralParams {
        p: a.p,
        alpha: a.alphas[0],
        beta: a.betas[0],
        rho0: a.rho0,
        ..manifold.params(a.delta, a.p)
    };
    let admissions = admission_for(&manifold, cfg)?;
    let weak_admission = admissions[0].clone();
    let admission = admissions.last().cloned().unwrap_or(weak_admission.clone());
    timing.lap("geometry", &mut clock);

    let dec = eigendecompose(&manifold.laplacian, EigenOptions::full())?;
    let vol = manifold.volume.total();
    let tmin = t_min(&dec, vol)?;
    let ctx = ReportContext::new(params, a.kprime, &admission, manifold.volume.clone(), tmin);
    let weak_ctx = ReportContext::new(params, a.kprime, &weak_admission, manifold.volume.clone(), tmin);
    timing.lap("laplacian", &mut clock);

    let mut reports = check_heat_kernel_bound(&dec, &ctx, &a.t_samples)?;
    timing.lap("heat_kernel", &mut clock);

    let rho_minus = manifold.rho_minus();
    let well = manifold.well(a.rho0);
    let mut potentials = vec![
        Potential {
            label: "rho_minus".to_string(),
            values: rho_minus.clone(),
        },
        Potential {
            label: "well".to_string(),
            values: well.clone(),
        },
    ];
    for (k, v) in random_bump_potentials(&grid, a.random_potentials, a.seed).into_iter().enumerate() {
        potentials.push(Potential {
            label: format!("random_{k}"),
            values: v,
        });
    }
    let mut b_rho_minus = Vec::new();
    for pot in &potentials {
        let kato = labeled(check_kato_bound(&dec, &pot.values, &a.alphas, &ctx)?, &pot.label);
        let bkato = labeled(check_bkato_bound(&dec, &pot.values, &a.betas, &ctx)?, &pot.label);
        for (ka, &alpha) in kato.iter().zip(&a.alphas) {
            for (kb, &beta) in bkato.iter().zip(&a.betas) {
                for r in check_kato_relation(ka.numeric_lhs, kb.numeric_lhs, alpha, beta) {
                    reports.push(r.labeled(pot.label.clone()));
                }
            }
        }
        if pot.label == "rho_minus" {
            b_rho_minus = bkato.iter().map(|r| r.numeric_lhs).collect();
        }
        reports.extend(kato);
        reports.extend(bkato);
    }
    timing.lap("kato", &mut clock);

    let schrodinger = manifold.schrodinger()?;
    let need_vectors = a.ultracontractivity || a.hodge;
    let dec_schr = eigendecompose(
        &schrodinger,
        if need_vectors { EigenOptions::full() } else { EigenOptions::values_only() },
    )?;
    let min_schr = dec_schr.min_eigenvalue();
    let c_well = c_kato_numeric(&dec, &well, a.rho0)?;
    let mut min_shifted = None;
    if a.positivity {
        let pos = check_positivity(&manifold.laplacian, &dec, &well, a.rho0)?;
        min_shifted = Some(pos[0].paper_rhs);
        reports.extend(labeled(pos, "well"));
    }
    let conclusion = if c_well < 1.0 - STRICT_TOL {
        BoundReport::compare(BoundName::VanishingConclusion, 0.0, min_schr, Relation::Less)
    } else {
        BoundReport::skipped(BoundName::VanishingConclusion, "c_kato(W, rho0) >= 1", 0.0, min_schr)
    };
    reports.push(conclusion.with("rho0", a.rho0).extra("c_kato", c_well));
    timing.lap("positivity", &mut clock);

    let well_mean = manifold.volume.lp_mean(&well, a.p)?;
    reports.extend(check_vanishing_criterion(
        VanishingInputs {
            rho0: a.rho0,
            well_mean,
            schrodinger_min: min_schr,
        },
        &weak_ctx,
    )?);
    let thresholds = eval_er_threshold(a.rho0, &weak_ctx.params, a.kprime)?;
    timing.lap("vanishing", &mut clock);

    for (&beta, &b) in a.betas.iter().zip(&b_rho_minus) {
        if a.l1 {
            reports.extend(check_l1_l1(&manifold.laplacian, &manifold.rho, b, beta, &a.t_samples)?);
        }
        if a.ultracontractivity {
            reports.extend(check_ultracontractivity(&dec_schr, b, beta, &a.p_values, &a.t_samples, &ctx)?);
        }
    }
    timing.lap("semigroups", &mut clock);

    let rho_minus_mean = manifold.volume.lp_mean(&rho_minus, a.p)?;
    let mut obs = Observables {
        rho_minus_mean_p: rho_minus_mean,
        rho_minus_mean_half_delta: manifold.volume.lp_mean(&rho_minus, 0.5 * a.delta)?,
        well_mean_p: well_mean,
        c_kato_well: c_well,
        c_kato_well_rhs: eval_kato_bound_rhs(well_mean, a.rho0, &ctx.params, a.kprime, ctx.class)?,
        b_kato_rho_minus_rhs: a
            .betas
            .iter()
            .map(|&beta| eval_bkato_bound_rhs(rho_minus_mean, beta, &ctx.params, a.kprime, ctx.class))
            .collect::<Result<_, _>>()?,
        b_kato_rho_minus: b_rho_minus.clone(),
        min_eig_schrodinger: min_schr,
        min_eig_shifted: min_shifted,
        vanishing_threshold: thresholds.exact,
        vanishing_threshold_auto_delta: thresholds.auto_delta,
        ..Observables::default()
    };

    if a.hodge {
        let hodge = assemble_hodge1(&manifold.metric, &grid)?;
        let dec_h = eigendecompose(&hodge.hodge, EigenOptions::full())?;
        let count = harmonic_dim(dec_h.eigenvalues(), a.gap_tol);
        timing.lap("hodge_spectrum", &mut clock);
        let slack = if manifold.metric.is_translation_invariant() {
            FLAT_DOMINATION_SLACK
        } else {
            let h = (0..d).map(|k| grid.spacing(k)).fold(0.0f64, f64::max);
            a.domination_constant * h * h
        };
        reports.extend(domination_reports(&manifold, &hodge, &dec_schr, &dec_h, &a.t_samples, slack, tmin)?);
        reports.extend(check_trace_comparison(&dec_schr, &dec_h, d, &a.t_samples, tmin));
        let b1 = count.count();
        for (&beta, &b) in a.betas.iter().zip(&b_rho_minus) {
            let betti = check_betti_bounds(b1, b, beta, rho_minus_mean, &weak_ctx)?;
            if obs.betti_bound.is_none() && betti[0].hypothesis_ok {
                obs.betti_bound = Some(betti[0].paper_rhs);
            }
            if obs.betti_bound_lp.is_none() && betti[1].hypothesis_ok {
                obs.betti_bound_lp = Some(betti[1].paper_rhs);
            }
            reports.extend(betti);
        }
        reports.push(check_vanishing_contrapositive(b1, well_mean, thresholds.exact, a.rho0));
        obs.harmonic_dim = b1;
        obs.harmonic_raw_count = Some(count.raw_count());
        obs.harmonic_gap_factor = Some(count.gap_factor());
        obs.hodge_lowest = dec_h.eigenvalues().iter().take(HODGE_ECHO).copied().collect();
        obs.domination_slack = Some(slack);
        timing.lap("hodge_checks", &mut clock);
    }

    sort_reports(&mut reports);
    let rho_min = manifold.rho.iter().copied().fold(f64::INFINITY, f64::min);
    let rho_max = manifold.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let manifest = Manifest {
        artifact_version: ARTIFACT_VERSION,
        config: cfg.clone(),
        manifold: ManifoldSummary {
            family: cfg.manifold.metric.name().to_string(),
            d,
            n: cfg.manifold.n,
            period: cfg.manifold.period,
            nodes: grid.len(),
            spacing: grid.spacing(0),
            volume: vol,
            diameter: manifold.diameter.value,
            diameter_anisotropy: manifold.diameter.anisotropy,
            rho_min,
            rho_max,
            t_min: tmin,
        },
        admissibility: admissions,
        observables: obs,
        summary: Summary::of(&reports),
        reports,
    };
    Ok(Outcome { manifest, timing })
}

fn domination_reports(
    manifold: &Manifold,
    hodge: &HodgeOperator,
    dec_schr: &SpectralDecomposition,
    dec_h: &SpectralDecomposition,
    t_samples: &[f64],
    slack: f64,
    tmin: f64,
) -> Result<Vec<BoundReport>, CliError> {
    let d = manifold.dim();
    let nodes = manifold.grid.len();
    let mut forms: Vec<(String, Vec<f64>)> =
        (0..d).map(|j| (format!("dx{}", j + 1), coordinate_form(nodes, d, j))).collect();
    forms.push(("fourier".to_string(), fourier_form(manifold)));
    let mut out = Vec::new();
    for (label, omega) in forms {
        let reports = check_domination(dec_schr, dec_h, hodge, &omega, t_samples, slack, tmin)?;
        out.extend(reports.into_iter().map(|r| r.labeled(label.clone()).extra("slack", slack)));
    }
    Ok(out)
}

/// One row of a sweep table.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub rho_minus_mean_p: Option<f64>,
    pub well_mean_p: Option<f64>,
    pub admitted: Option<bool>,
    pub admission_lhs: Option<f64>,
    pub admission_rhs: Option<f64>,
    pub c_kato_well: f64,
    pub c_kato_well_rhs: Option<f64>,
    pub b_kato_rho_minus: Option<f64>,
    pub b_kato_rho_minus_rhs: Option<f64>,
    pub min_eig_schrodinger: f64,
    pub min_eig_shifted: Option<f64>,
    pub harmonic_dim: Option<usize>,
    pub betti_bound: Option<f64>,
    pub betti_bound_lp: Option<f64>,
    pub verified: usize,
    pub violated: usize,
    pub skipped: usize,
}

pub const SWEEP_COLUMNS: [&str; 18] = [
    "value",
    "rho_minus_mean_p",
    "well_mean_p",
    "admitted",
    "admission_lhs",
    "admission_rhs",
    "c_kato_well",
    "c_kato_well_rhs",
    "b_kato_rho_minus",
    "b_kato_rho_minus_rhs",
    "min_eig_schrodinger",
    "min_eig_shifted",
    "harmonic_dim",
    "betti_bound",
    "betti_bound_lp",
    "verified",
    "violated",
    "skipped",
];

impl SweepRow {
    fn from_manifest(value: f64, m: &Manifest) -> Self {
        let adm = m.admissibility.last();
        let o = &m.observables;
        SweepRow {
            value,
            rho_minus_mean_p: Some(o.rho_minus_mean_p),
            well_mean_p: Some(o.well_mean_p),
            admitted: adm.map(|a| a.admitted),
            admission_lhs: adm.map(|a| a.lhs),
            admission_rhs: adm.map(|a| a.rhs),
            c_kato_well: o.c_kato_well,
            c_kato_well_rhs: Some(o.c_kato_well_rhs),
            b_kato_rho_minus: o.b_kato_rho_minus.first().copied(),
            b_kato_rho_minus_rhs: o.b_kato_rho_minus_rhs.first().copied(),
            min_eig_schrodinger: o.min_eig_schrodinger,
            min_eig_shifted: o.min_eig_shifted,
            harmonic_dim: o.harmonic_dim,
            betti_bound: o.betti_bound,
            betti_bound_lp: o.betti_bound_lp,
            verified: m.summary.total.verified,
            violated: m.summary.total.violated,
            skipped: m.summary.total.skipped,
        }
    }

    pub fn cells(&self) -> Vec<String> {
        use crate::output::format_float as f;
        let of = |x: Option<f64>| x.map(f).unwrap_or_default();
        vec![
            f(self.value),
            of(self.rho_minus_mean_p),
            of(self.well_mean_p),
            self.admitted.map(|b| b.to_string()).unwrap_or_default(),
            of(self.admission_lhs),
            of(self.admission_rhs),
            f(self.c_kato_well),
            of(self.c_kato_well_rhs),
            of(self.b_kato_rho_minus),
            of(self.b_kato_rho_minus_rhs),
            f(self.min_eig_schrodinger),
            of(self.min_eig_shifted),
            self.harmonic_dim.map(|c| c.to_string()).unwrap_or_default(),
            of(self.betti_bound),
            of(self.betti_bound_lp),
            self.verified.to_string(),
            self.violated.to_string(),
            self.skipped.to_string(),
        ]
    }
}

/// Bisection bracket of the value where a hypothesis stops holding.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdBracket {
    /// `admission_ratio` or `c_kato_well`; the hypothesis holds below 1.
    pub quantity: String,
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub width: f64,
    pub range: f64,
    pub evaluations: usize,
}

impl ThresholdBracket {
    fn new(quantity: &str, b: Bracket, range: f64) -> Self {
        ThresholdBracket {
            quantity: quantity.to_string(),
            lo: b.lo,
            hi: b.hi,
            f_lo: b.f_lo,
            f_hi: b.f_hi,
            width: b.hi - b.lo,
            range,
            evaluations: b.evaluations,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepManifest {
    pub artifact_version: &'static str,
    pub parameter: String,
    pub config: RunConfig,
    pub rows: Vec<SweepRow>,
    pub bracket: Option<ThresholdBracket>,
    pub summary: Summary,
    /// Per-point manifests; empty for `well_depth`.
    pub points: Vec<Manifest>,
    /// Reports of the `well_depth` sweep.
    pub reports: Vec<BoundReport>,
}

impl SweepManifest {
    pub fn violated(&self) -> bool {
        self.summary.total.violated > 0
    }
}

/// Canonical sweep values: configured order, or one point at the base
/// configuration when the list is empty.
fn sweep_points(cfg: &RunConfig) -> (SweepParameter, Vec<Option<f64>>) {
    match &cfg.sweep {
        Some(s) if !s.values.is_empty() => (s.parameter, s.values.iter().map(|&v| Some(v)).collect()),
        Some(s) => (s.parameter, vec![None]),
        None => (SweepParameter::Epsilon, vec![None]),
    }
}

fn base_value(cfg: &RunConfig, p: SweepParameter) -> f64 {
    let a = &cfg.analysis;
    match p {
        SweepParameter::Epsilon => 1.0,
        SweepParameter::Alpha => a.alphas[0],
        SweepParameter::Beta => a.betas[0],
        SweepParameter::Rho0 => a.rho0,
        SweepParameter::Kprime => a.kprime,
        SweepParameter::Delta => a.delta,
        SweepParameter::P => a.p,
        SweepParameter::WellDepth => 0.0,
    }
}

pub fn run_sweep(cfg: &RunConfig, workers: usize) -> Result<(SweepManifest, Timing), CliError> {
    let (parameter, points) = sweep_points(cfg);
    if parameter == SweepParameter::WellDepth {
        return well_depth_sweep(cfg, &points);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("workers: {e}")))?;
    let configs: Vec<(f64, RunConfig)> = points
        .iter()
        .map(|v| match v {
            Some(v) => (*v, cfg.at(parameter, *v)),
            None => (base_value(cfg, parameter), cfg.clone()),
        })
        .collect();
    let outcomes: Vec<Result<Outcome, CliError>> = pool.install(|| configs.par_iter().map(|(_, c)| analyze(c)).collect());
    let mut rows = Vec::new();
    let mut manifests = Vec::new();
    let mut timing = Timing::default();
    for ((value, _), outcome) in configs.iter().zip(outcomes) {
        let o = outcome?;
        rows.push(SweepRow::from_manifest(*value, &o.manifest));
        for (name, s) in o.timing.phases {
            timing.phases.push((format!("{}={value}:{name}", parameter.as_str()), s));
        }
        manifests.push(o.manifest);
    }
    let start = Instant::now();
    let bracket = admission_bracket(cfg, parameter, &rows)?;
    timing.phases.push(("bracket".to_string(), start.elapsed().as_secs_f64()));
    let all: Vec<BoundReport> = manifests.iter().flat_map(|m| m.reports.iter().cloned()).collect();
    let manifest = SweepManifest {
        artifact_version: ARTIFACT_VERSION,
        parameter: parameter.as_str().to_string(),
        config: cfg.clone(),
        rows,
        bracket,
        summary: Summary::of(&all),
        points: manifests,
        reports: Vec::new(),
    };
    Ok((manifest, timing))
}

/// Bisects the first pair of consecutive values (in increasing order) where
/// admission flips.
fn admission_bracket(cfg: &RunConfig, parameter: SweepParameter, rows: &[SweepRow]) -> Result<Option<ThresholdBracket>, CliError> {
    if !matches!(
        parameter,
        SweepParameter::Epsilon | SweepParameter::Delta | SweepParameter::P
    ) || rows.len() < 2
    {
        return Ok(None);
    }
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
    let range = sorted[sorted.len() - 1].value - sorted[0].value;
    let width = cfg.sweep.as_ref().map_or(1e-4, |s| s.bracket_width) * range;
    for pair in sorted.windows(2) {
        if pair[0].admitted == pair[1].admitted {
            continue;
        }
        let ratio = |v: f64| -> katobound::Result<f64> {
            let c = cfg.at(parameter, v);
            let grid = c.grid().map_err(|_| katobound::Error::InvalidGrid("sweep grid".to_string()))?;
            let m = Manifold::build(c.manifold.metric.clone(), grid, c.manifold.stencil)?;
            admission_ratio(&m, &c).map_err(|e| match e {
                CliError::Core(e) => e,
                other => katobound::Error::InvalidMetric(other.to_string()),
            })
        };
        if let Some(b) = bisect(ratio, pair[0].value, pair[1].value, 1.0, width)? {
            return Ok(Some(ThresholdBracket::new("admission_ratio", b, range)));
        }
    }
    Ok(None)
}

/// Synthetic curvature `ρ + floor − ε·bump`, its well `W = (ρ_ε − ρ₀)₋`.
pub struct SyntheticWell {
    pub laplacian_dec: SpectralDecomposition,
    pub manifold: Manifold,
    pub bump: Vec<f64>,
    pub floor: f64,
    pub rho0: f64,
}

impl SyntheticWell {
    pub fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let grid = cfg.grid()?;
        let manifold = Manifold::build(cfg.manifold.metric.clone(), grid.clone(), cfg.manifold.stencil)?;
        let laplacian_dec = eigendecompose(&manifold.laplacian, EigenOptions::full())?;
        let bump = sample_profile(
            &grid,
            &Profile {
                bumps: vec![cfg.well_bump()],
                ..Profile::default()
            },
        );
        Ok(SyntheticWell {
            laplacian_dec,
            manifold,
            bump,
            floor: cfg.analysis.well.floor,
            rho0: cfg.analysis.rho0,
        })
    }

    pub fn curvature(&self, depth: f64) -> Vec<f64> {
        self.manifold
            .rho
            .iter()
            .zip(&self.bump)
            .map(|(r, b)| r + self.floor - depth * b)
            .collect()
    }

    pub fn well(&self, depth: f64) -> Vec<f64> {
        self.curvature(depth).iter().map(|&r| (self.rho0 - r).max(0.0)).collect()
    }

    pub fn c_kato(&self, depth: f64) -> Result<f64, CliError> {
        Ok(c_kato_numeric(&self.laplacian_dec, &self.well(depth), self.rho0)?)
    }

    /// Positivity, form bound and the conclusion `L + ρ_ε > 0` at one depth.
    pub fn reports(&self, depth: f64) -> Result<(SweepRow, Vec<BoundReport>), CliError> {
        let w = self.well(depth);
        let mut reports = check_positivity(&self.manifold.laplacian, &self.laplacian_dec, &w, self.rho0)?;
        let c = reports[0].extras["c_kato"];
        let shifted_min = reports[0].paper_rhs;
        let schr_min = min_eigenvalue(&self.manifold.laplacian.with_potential(&self.curvature(depth))?)?;
        reports.push(if c < 1.0 - STRICT_TOL {
            BoundReport::compare(BoundName::VanishingConclusion, 0.0, schr_min, Relation::Less)
        } else {
            BoundReport::skipped(BoundName::VanishingConclusion, "c_kato(W, rho0) >= 1", 0.0, schr_min)
        });
        let reports: Vec<BoundReport> = reports
            .into_iter()
            .map(|r| r.with("well_depth", depth).with("rho0", self.rho0).extra("c_kato", c).labeled("synthetic"))
            .collect();
        let summary = Summary::of(&reports);
        let row = SweepRow {
            value: depth,
            well_mean_p: None,
            c_kato_well: c,
            min_eig_schrodinger: schr_min,
            min_eig_shifted: Some(shifted_min),
            verified: summary.total.verified,
            violated: summary.total.violated,
            skipped: summary.total.skipped,
            ..SweepRow::default()
        };
        Ok((row, reports))
    }

    /// Bisects `c_Kato(W_ε, ρ₀) = 1` on `[lo, hi]`.
    pub fn bracket(&self, lo: f64, hi: f64, width: f64) -> Result<Option<Bracket>, CliError> {
        let f = |depth: f64| c_kato_numeric(&self.laplacian_dec, &self.well(depth), self.rho0);
        Ok(bisect(f, lo, hi, 1.0, width)?)
    }
}

fn well_depth_sweep(cfg: &RunConfig, points: &[Option<f64>]) -> Result<(SweepManifest, Timing), CliError> {
    let mut timing = Timing::default();
    let mut clock = Instant::now();
    let sw = SyntheticWell::new(cfg)?;
    timing.lap("laplacian", &mut clock);
    let values: Vec<f64> = points.iter().map(|v| v.unwrap_or(0.0)).collect();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &v in &values {
        let (row, r) = sw.reports(v)?;
        rows.push(row);
        reports.extend(r);
    }
    timing.lap("points", &mut clock);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let bracket = if range > 0.0 {
        let width = cfg.sweep.as_ref().map_or(1e-4, |s| s.bracket_width) * range;
        sw.bracket(lo, hi, width)?.map(|b| ThresholdBracket::new("c_kato_well", b, range))
    } else {
        None
    };
    timing.lap("bracket", &mut clock);
    sort_reports(&mut reports);
    let manifest = SweepManifest {
        artifact_version: ARTIFACT_VERSION,
        parameter: SweepParameter::WellDepth.as_str().to_string(),
        config: cfg.clone(),
        rows,
        bracket,
        summary: Summary::of(&reports),
        points: Vec::new(),
        reports,
    };
    Ok((manifest, timing))
}

//! Numerical Kato constants, admissibility, and the function-level bounds.
//!
//! All checks return [`BoundReport`]s; a violated inequality is data, not an
//! error.

use std::collections::BTreeMap;

use crate::constants::{
    eval_bkato_bound_rhs, eval_er_threshold, eval_gallot_rhs, eval_gamma, eval_kato_bound_rhs,
    eval_ultra_constant, eval_voigt, eval_weak_threshold, heat_factor, AdmissibleClass, SpectralParams,
};
use crate::eigen::{eigendecompose, EigenOptions, SpectralDecomposition};
use crate::error::{Error, Result};
use crate::geometry::{Bump, GridSpec, Profile, VolumeForm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use crate::model::Manifold;
use crate::operator::DiscreteOperator;
use crate::quadrature::{composite_rule, graded_breakpoints};
use crate::report::{AdmissibilityMode, AdmissibilityReport, BoundName, BoundReport, Relation};
use crate::spectral::heat_kernel_sup;

/// Gauss–Legendre nodes per panel for `b_Kato`.
pub const DEFAULT_QUAD_ORDER: usize = 16;

/// Tolerance on both sides of the relation between `c_Kato` and `b_Kato`.
pub const RELATION_TOL: f64 = 1e-8;

/// `c_Kato < 1` is only taken as a hypothesis when it holds by this margin.
pub const STRICT_TOL: f64 = 1e-9;

/// Entries of a potential below this are treated as a sign error.
pub const NEGATIVE_TOL: f64 = 1e-12;

fn check_nonnegative(v: &[f64]) -> Result<()> {
    match v.iter().enumerate().find(|(_, &x)| x < -NEGATIVE_TOL || x.is_nan()) {
        Some((node, &value)) => Err(Error::NegativePotential { node, value }),
        None => Ok(()),
    }
}

fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `c_Kato(V, α) = ‖(L + α)⁻¹V‖_∞`.
pub fn c_kato_numeric(dec: &SpectralDecomposition, v: &[f64], alpha: f64) -> Result<f64> {
    Ok(c_kato_profile(dec, v, &[alpha])?[0])
}

/// `c_Kato(V, α)` for several `α` from one projection of `V`.
pub fn c_kato_profile(dec: &SpectralDecomposition, v: &[f64], alphas: &[f64]) -> Result<Vec<f64>> {
    check_nonnegative(v)?;
    for &alpha in alphas {
        if !(alpha > 0.0) {
            return Err(crate::error::domain("c_Kato", "alpha > 0", format!("alpha = {alpha}")));
        }
    }
    let out = dec.apply_family(alphas.len(), |j, l| 1.0 / (l + alphas[j]), v)?;
    Ok(out.iter().map(|f| sup_norm(f)).collect())
}

/// `b_Kato(V, β) = ∫₀^β ‖e^{−tL}V‖_∞ dt`.
pub fn b_kato_numeric(dec: &SpectralDecomposition, v: &[f64], beta: f64, order: usize) -> Result<f64> {
    Ok(b_kato_profile(dec, v, &[beta], order)?[0])
}

/// Quadrature rule on `[0, max β]` with a breakpoint at every requested `β`,
/// panels graded toward 0 down to the mesh time scale `1/λ_max` and at most
/// unit length elsewhere.
fn b_kato_rule(betas: &[f64], lambda_max: f64) -> Vec<f64> {
    let mut sorted: Vec<f64> = betas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let first = sorted[0];
    let levels = ((first * lambda_max.max(1.0)).log2().ceil().max(0.0) as usize + 4).min(60);
    let mut pts = graded_breakpoints(first, levels);
    for &b in &sorted[1..] {
        let a = *pts.last().expect("nonempty");
        let panels = (b - a).ceil().max(1.0) as usize;
        for k in 1..=panels {
            pts.push(a + (b - a) * k as f64 / panels as f64);
        }
    }
    pts
}

/// `b_Kato(V, β)` at every `β` in `betas`, sharing one quadrature rule.
pub fn b_kato_profile(dec: &SpectralDecomposition, v: &[f64], betas: &[f64], order: usize) -> Result<Vec<f64>> {
    check_nonnegative(v)?;
    if betas.is_empty() {
        return Ok(Vec::new());
    }
    for &beta in betas {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(crate::error::domain("b_Kato", "beta > 0", format!("beta = {beta}")));
        }
    }
    let breakpoints = b_kato_rule(betas, dec.max_eigenvalue());
    let rule = composite_rule(&breakpoints, order);
    let times: Vec<f64> = rule.iter().map(|(t, _)| *t).collect();
    let fields = dec.apply_family(times.len(), |j, l| (-l * times[j]).exp(), v)?;
    let integrand: Vec<f64> = fields.iter().map(|f| sup_norm(f)).collect();
    Ok(betas
        .iter()
        .map(|&beta| {
            rule.iter()
                .zip(&integrand)
                .filter(|((t, _), _)| *t < beta)
                .map(|((_, w), f)| w * f)
                .sum()
        })
        .collect())
}

/// `⫶((ρ₋/(d−1)) − λ²)₊^{δ/2}⫶₁`, the left side of the curvature condition.
pub fn gallot_lhs(volume: &VolumeForm, rho: &[f64], d: usize, delta: f64, lambda: f64) -> Result<f64> {
    let dm1 = d as f64 - 1.0;
    let f: Vec<f64> = rho
        .iter()
        .map(|&r| ((-r).max(0.0) / dm1 - lambda * lambda).max(0.0).powf(0.5 * delta))
        .collect();
    Ok(volume.integrate(&f)? / volume.total())
}

/// Log-spaced scan of `λ` for the curvature condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaScan {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Default for LambdaScan {
    fn default() -> Self {
        LambdaScan {
            lo: 1e-3,
            hi: 1e2,
            count: 161,
        }
    }
}

impl LambdaScan {
    pub fn values(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![self.lo];
        }
        let (a, b) = (self.lo.ln(), self.hi.ln());
        (0..self.count)
            .map(|k| (a + (b - a) * k as f64 / (self.count - 1) as f64).exp())
            .collect()
    }
}

/// Weak admission, the curvature condition at
/// a given `λ`, or the scan picking the admitting `λ` with the largest `γ`
/// (smallest heat-kernel constant).
pub fn check_admissibility(
    manifold: &Manifold,
    delta: f64,
    mode: AdmissibilityMode,
    lambda: Option<f64>,
    scan: LambdaScan,
) -> Result<AdmissibilityReport> {
    let d = manifold.dim();
    let diameter = manifold.diameter.value;
    let base = SpectralParams::new(d, delta, diameter);
    base.check_dimension()?;
    match mode {
        AdmissibilityMode::Weak => {
            let lhs = manifold.volume.lp_mean(&manifold.rho_minus(), 0.5 * delta)?;
            let rhs = eval_weak_threshold(&base)?;
            Ok(AdmissibilityReport {
                which: mode,
                delta,
                diameter,
                d,
                lambda: None,
                lhs,
                rhs,
                admitted: lhs <= rhs,
            })
        }
        AdmissibilityMode::Gallot => {
            let candidates = match lambda {
                Some(l) => vec![l],
                None => scan.values(),
            };
            let mut best: Option<(f64, f64, f64, f64)> = None;
            let mut first: Option<(f64, f64, f64)> = None;
            for lam in candidates {
                let params = SpectralParams { lambda: lam, ..base };
                let lhs = gallot_lhs(&manifold.volume, &manifold.rho, d, delta, lam)?;
                let rhs = eval_gallot_rhs(&params)?;
                first.get_or_insert((lam, lhs, rhs));
                if lhs <= rhs {
                    let gamma = eval_gamma(&params)?;
                    if best.is_none_or(|b| gamma > b.3) {
                        best = Some((lam, lhs, rhs, gamma));
                    }
                }
            }
            let (lam, lhs, rhs, admitted) = match (best, first) {
                (Some((l, a, b, _)), _) => (l, a, b, true),
                (None, Some((l, a, b))) => (l, a, b, false),
                (None, None) => return Err(crate::error::domain("lambda scan", "count >= 1", "empty".to_string())),
            };
            Ok(AdmissibilityReport {
                which: mode,
                delta,
                diameter,
                d,
                lambda: Some(lam),
                lhs,
                rhs,
                admitted,
            })
        }
    }
}

/// Everything a bound needs besides the numeric left side.
#[derive(Debug, Clone)]
pub struct ReportContext {
    pub params: SpectralParams,
    pub kprime: f64,
    pub class: AdmissibleClass,
    pub admitted: bool,
    pub volume: VolumeForm,
    /// Smallest time resolved by the mesh.
    pub t_min: f64,
}

impl ReportContext {
    /// Context from an admissibility outcome; a Gallot admission selects the
    /// level class at its `λ`.
    pub fn new(
        params: SpectralParams,
        kprime: f64,
        admission: &AdmissibilityReport,
        volume: VolumeForm,
        t_min: f64,
    ) -> Self {
        let (class, params) = match (admission.which, admission.lambda) {
            (AdmissibilityMode::Gallot, Some(l)) => (AdmissibleClass::Level, SpectralParams { lambda: l, ..params }),
            _ => (AdmissibleClass::Weak, params),
        };
        ReportContext {
            params,
            kprime,
            class,
            admitted: admission.admitted,
            volume,
            t_min,
        }
    }

    pub fn provenance(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("d".to_string(), self.params.d as f64);
        m.insert("delta".to_string(), self.params.delta);
        m.insert("p".to_string(), self.params.p);
        m.insert("diameter".to_string(), self.params.diameter);
        m.insert("kprime".to_string(), self.kprime);
        if self.class == AdmissibleClass::Level {
            m.insert("lambda".to_string(), self.params.lambda);
        }
        m
    }

    fn gate(&self, name: BoundName, lhs: f64, rhs: f64) -> Option<BoundReport> {
        if !self.admitted {
            return Some(BoundReport::skipped(name, "manifold not admitted", lhs, rhs).with_all(&self.provenance()));
        }
        if self.params.validate().is_err() || !(self.params.delta < 2.0 * self.params.p) {
            return Some(BoundReport::skipped(name, "requires d < delta < 2p", lhs, rhs).with_all(&self.provenance()));
        }
        None
    }

    fn time_gate(&self, name: BoundName, t: f64) -> Option<BoundReport> {
        if !(t > 0.0 && t <= 1.0) {
            return Some(BoundReport::skipped(name, "t outside (0, 1]", f64::NAN, f64::NAN).with("t", t));
        }
        if t < self.t_min {
            return Some(
                BoundReport::skipped(name, "t below mesh floor", f64::NAN, f64::NAN)
                    .with("t", t)
                    .extra("t_min", self.t_min),
            );
        }
        None
    }
}

/// `sup k(t,·,·) ≤ (1 + K)/Vol·t^{−δ/2}` at each sample.
pub fn check_heat_kernel_bound(dec: &SpectralDecomposition, ctx: &ReportContext, t_samples: &[f64]) -> Result<Vec<BoundReport>> {
    let factor = heat_factor(&ctx.params, ctx.kprime, ctx.class)?;
    let vol = ctx.volume.total();
    let mut out = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        if let Some(r) = ctx.time_gate(BoundName::HeatKernel, t) {
            out.push(r.with_all(&ctx.provenance()));
            continue;
        }
        let lhs = heat_kernel_sup(dec, t)?;
        let rhs = factor / vol * t.powf(-0.5 * ctx.params.delta);
        let report = ctx
            .gate(BoundName::HeatKernel, lhs, rhs)
            .unwrap_or_else(|| BoundReport::compare(BoundName::HeatKernel, lhs, rhs, Relation::LessEq));
        out.push(report.with_all(&ctx.provenance()).with("t", t));
    }
    Ok(out)
}

/// `c_Kato(V, α) ≤ (1 + K)^{1/p} I(α, δ, p) ⫶V⫶_p` for each `α`.
pub fn check_kato_bound(
    dec: &SpectralDecomposition,
    v: &[f64],
    alphas: &[f64],
    ctx: &ReportContext,
) -> Result<Vec<BoundReport>> {
    let mean = ctx.volume.lp_mean(v, ctx.params.p)?;
    let lhs = c_kato_profile(dec, v, alphas)?;
    let mut out = Vec::with_capacity(alphas.len());
    for (&alpha, &c) in alphas.iter().zip(&lhs) {
        let report = match ctx.gate(BoundName::Kato, c, f64::NAN) {
            Some(r) => r,
            None => {
                let rhs = eval_kato_bound_rhs(mean, alpha, &ctx.params, ctx.kprime, ctx.class)?;
                BoundReport::compare(BoundName::Kato, c, rhs, Relation::LessEq)
            }
        };
        out.push(report.with_all(&ctx.provenance()).with("alpha", alpha).extra("v_mean_p", mean));
    }
    Ok(out)
}

/// `b_Kato(V, β) ≤ (1 + K)^{1/p} ⫶V⫶_p J(β, δ, p)` for each `β`.
pub fn check_bkato_bound(
    dec: &SpectralDecomposition,
    v: &[f64],
    betas: &[f64],
    ctx: &ReportContext,
) -> Result<Vec<BoundReport>> {
    let mean = ctx.volume.lp_mean(v, ctx.params.p)?;
    let lhs = b_kato_profile(dec, v, betas, DEFAULT_QUAD_ORDER)?;
    let mut out = Vec::with_capacity(betas.len());
    for (&beta, &b) in betas.iter().zip(&lhs) {
        let report = match ctx.gate(BoundName::BKato, b, f64::NAN) {
            Some(r) => r,
            None => {
                let rhs = eval_bkato_bound_rhs(mean, beta, &ctx.params, ctx.kprime, ctx.class)?;
                BoundReport::compare(BoundName::BKato, b, rhs, Relation::LessEq)
            }
        };
        out.push(report.with_all(&ctx.provenance()).with("beta", beta).extra("v_mean_p", mean));
    }
    Ok(out)
}

/// `(1 − e^{−αβ})c_Kato ≤ b_Kato ≤ e^{αβ}c_Kato` for one `(α, β)`.
pub fn check_kato_relation(c_kato: f64, b_kato: f64, alpha: f64, beta: f64) -> [BoundReport; 2] {
    let ab = alpha * beta;
    let lower = BoundReport::compare_tol(
        BoundName::KatoRelationLower,
        -(-ab).exp_m1() * c_kato,
        b_kato,
        Relation::LessEq,
        RELATION_TOL,
        0.0,
    );
    let upper = BoundReport::compare_tol(
        BoundName::KatoRelationUpper,
        b_kato,
        ab.exp() * c_kato,
        Relation::LessEq,
        RELATION_TOL,
        0.0,
    );
    [lower, upper].map(|r| r.with("alpha", alpha).with("beta", beta))
}

/// Smallest eigenvalue from a dense values-only solve.
pub fn min_eigenvalue(op: &DiscreteOperator) -> Result<f64> {
    Ok(eigendecompose(op, EigenOptions::values_only())?.min_eigenvalue())
}

/// `c_Kato(W, α) < 1 ⇒ L + α − W > 0`, plus the form bound
/// `W ≤ c_Kato(W, α)(L + α)` as `min-eig(c(L+α) − W) ≥ −tol`.
pub fn check_positivity(
    laplacian: &DiscreteOperator,
    dec: &SpectralDecomposition,
    w: &[f64],
    alpha: f64,
) -> Result<Vec<BoundReport>> {
    let c = c_kato_numeric(dec, w, alpha)?;
    let shifted: Vec<f64> = w.iter().map(|&x| alpha - x).collect();
    let lowest = min_eigenvalue(&laplacian.with_potential(&shifted)?)?;
    let positivity = if c < 1.0 - STRICT_TOL {
        BoundReport::compare(BoundName::Positivity, 0.0, lowest, Relation::Less)
    } else {
        BoundReport::skipped(BoundName::Positivity, "c_kato >= 1", 0.0, lowest)
    };
    let form: Vec<f64> = w.iter().map(|&x| c * alpha - x).collect();
    let form_min = min_eigenvalue(&laplacian.scaled(c)?.with_potential(&form)?)?;
    let tol = 1e-9 * (1.0 + c * (alpha + dec.max_eigenvalue()) + sup_norm(w));
    let form_report = BoundReport::compare_with_slack(BoundName::FormBound, -form_min, 0.0, Relation::LessEq, tol);
    Ok(vec![
        positivity.with("alpha", alpha).extra("c_kato", c),
        form_report.with("alpha", alpha).extra("c_kato", c),
    ])
}

/// Inputs of the vanishing criterion for one `ρ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanishingInputs {
    pub rho0: f64,
    /// `⫶(ρ − ρ₀)₋⫶_p`
    pub well_mean: f64,
    /// `min-eig(L + ρ)`
    pub schrodinger_min: f64,
}

/// The smallness hypothesis on `⫶(ρ−ρ₀)₋⫶_p` (exact and auto-`δ`
/// thresholds) and, when it holds, `min-eig(L + ρ) > 0`.
pub fn check_vanishing_criterion(input: VanishingInputs, ctx: &ReportContext) -> Result<Vec<BoundReport>> {
    let th = eval_er_threshold(input.rho0, &ctx.params, ctx.kprime)?;
    let mut out = Vec::new();
    for (name, threshold) in [
        (BoundName::Vanishing, th.exact),
        (BoundName::VanishingAutoDelta, th.auto_delta),
    ] {
        let gated = if name == BoundName::Vanishing { ctx.gate(name, 0.0, input.schrodinger_min) } else { None };
        let report = match gated {
            Some(r) => r,
            None if input.well_mean < threshold => {
                BoundReport::compare(name, 0.0, input.schrodinger_min, Relation::Less)
            }
            None => BoundReport::skipped(name, "hypothesis fails", 0.0, input.schrodinger_min),
        };
        let mut report = report
            .with_all(&ctx.provenance())
            .with("rho0", input.rho0)
            .extra("well_mean_p", input.well_mean)
            .extra("threshold", threshold);
        if let Some(s) = th.simplified {
            report = report.extra("threshold_simplified", s);
        }
        out.push(report);
    }
    Ok(out)
}

/// `‖T‖_{1→1} = max_y Σ_x w_x |K(x, y)|` of the kernel matrix.
fn l1_norm(kernel: &faer::Mat<f64>, weights: &[f64]) -> f64 {
    (0..kernel.ncols())
        .map(|y| (0..kernel.nrows()).map(|x| weights[x] * kernel[(x, y)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
}

/// `‖T‖_{p→∞} = max_x ‖K(x, ·)‖_{L^q}`, `1/p + 1/q = 1`.
fn p_inf_norm(kernel: &faer::Mat<f64>, weights: &[f64], p: f64) -> f64 {
    let n = kernel.nrows();
    (0..n)
        .map(|x| {
            if p == 1.0 {
                (0..n).map(|y| kernel[(x, y)].abs()).fold(0.0f64, f64::max)
            } else if p.is_infinite() {
                (0..n).map(|y| weights[y] * kernel[(x, y)].abs()).sum()
            } else {
                let q = p / (p - 1.0);
                let scale = (0..n).map(|y| kernel[(x, y)].abs()).fold(0.0f64, f64::max);
                if scale == 0.0 {
                    return 0.0;
                }
                let s: f64 = (0..n).map(|y| weights[y] * (kernel[(x, y)].abs() / scale).powf(q)).sum();
                scale * s.powf(1.0 / q)
            }
        })
        .fold(0.0f64, f64::max)
}

fn kato_hypothesis(b: f64) -> Option<&'static str> {
    if b.is_nan() || b >= 1.0 {
        Some("b_kato >= 1")
    } else {
        None
    }
}

/// `‖e^{−t(L+V)}‖_{1→1} ≤ C e^{ωt}` with `V` replaced by `−V₋`, the same for
/// the full `V`, and the domination of the former by the latter.
pub fn check_l1_l1(
    laplacian: &DiscreteOperator,
    v: &[f64],
    b: f64,
    beta: f64,
    t_samples: &[f64],
) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    if let Some(reason) = kato_hypothesis(b) {
        for &t in t_samples {
            for name in [BoundName::L1L1, BoundName::L1L1Full] {
                out.push(BoundReport::skipped(name, reason, f64::NAN, f64::NAN).with("t", t).with("beta", beta).extra("b", b));
            }
        }
        return Ok(out);
    }
    let voigt = eval_voigt(b, beta)?;
    let neg: Vec<f64> = v.iter().map(|&x| x.min(0.0)).collect();
    let dec_neg = eigendecompose(&laplacian.with_potential(&neg)?, EigenOptions::full())?;
    let dec_full = eigendecompose(&laplacian.with_potential(v)?, EigenOptions::full())?;
    let w = laplacian.mass();
    for &t in t_samples {
        let n_neg = l1_norm(&dec_neg.kernel_matrix(|l| (-l * t).exp())?, w);
        let n_full = l1_norm(&dec_full.kernel_matrix(|l| (-l * t).exp())?, w);
        let rhs = voigt.c * (voigt.omega * t).exp();
        for (name, lhs, bound) in [
            (BoundName::L1L1, n_neg, rhs),
            (BoundName::L1L1Full, n_full, rhs),
            (BoundName::L1L1Domination, n_full, n_neg),
        ] {
            out.push(
                BoundReport::compare(name, lhs, bound, Relation::LessEq)
                    .with("t", t)
                    .with("beta", beta)
                    .extra("b", b),
            );
        }
    }
    Ok(out)
}

/// `‖e^{−t(L+V)}‖_{p→∞} ≤ (1/(1−b))^{(1+t/β)(1−1/p)}(c_ultra t^{−δ/2})^{1/p}`
/// with exact discrete norms, and the interpolation sanity check
/// `‖·‖_{p→∞} ≤ ‖·‖_{1→∞}^{1/p}‖·‖_{∞→∞}^{1−1/p}`.
pub fn check_ultracontractivity(
    dec_schrodinger: &SpectralDecomposition,
    b: f64,
    beta: f64,
    p_values: &[f64],
    t_samples: &[f64],
    ctx: &ReportContext,
) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    let w = dec_schrodinger.mass().to_vec();
    for &t in t_samples {
        if let Some(r) = ctx.time_gate(BoundName::Ultracontractivity, t) {
            out.push(r.with_all(&ctx.provenance()).with("beta", beta));
            continue;
        }
        let kernel = dec_schrodinger.kernel_matrix(|l| (-l * t).exp())?;
        let n1 = p_inf_norm(&kernel, &w, 1.0);
        let ninf = p_inf_norm(&kernel, &w, f64::INFINITY);
        for &p in p_values {
            let lhs = p_inf_norm(&kernel, &w, p);
            let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
            let report = if let Some(reason) = kato_hypothesis(b) {
                BoundReport::skipped(BoundName::Ultracontractivity, reason, lhs, f64::NAN)
            } else if let Some(r) = ctx.gate(BoundName::Ultracontractivity, lhs, f64::NAN) {
                r
            } else {
                let c_ultra = eval_ultra_constant(b, beta, &ctx.params, ctx.kprime, ctx.volume.total(), ctx.class)?;
                let rhs = (1.0 / (1.0 - b)).powf((1.0 + t / beta) * (1.0 - inv_p))
                    * (c_ultra * t.powf(-0.5 * ctx.params.delta)).powf(inv_p);
                BoundReport::compare(BoundName::Ultracontractivity, lhs, rhs, Relation::LessEq).extra("c_ultra", c_ultra)
            };
            let tag = if p.is_infinite() { "p=inf".to_string() } else { format!("p={p}") };
            out.push(
                report
                    .with_all(&ctx.provenance())
                    .with("t", t)
                    .with("beta", beta)
                    .labeled(tag.clone())
                    .extra("b", b),
            );
            out.push(
                BoundReport::compare(
                    BoundName::UltraInterpolation,
                    lhs,
                    n1.powf(inv_p) * ninf.powf(1.0 - inv_p),
                    Relation::LessEq,
                )
                .with("t", t)
                .labeled(tag),
            );
        }
    }
    Ok(out)
}

/// Sampled profile `Σₖ aₖ·bumpₖ` on the grid.
pub fn sample_profile(grid: &GridSpec, profile: &Profile) -> Vec<f64> {
    (0..grid.len()).map(|i| profile.value(&grid.coords(i), grid.periods())).collect()
}

/// `count` nonnegative potentials, each a sum of one to three periodic bumps
/// with random amplitude in `[0.1, 2]`, width in `[0.3, 1.2]·L/2π` and
/// centre.
pub fn random_bump_potentials(grid: &GridSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = grid.periods().iter().fold(0.0f64, |m, &l| m.max(l)) / (2.0 * std::f64::consts::PI);
    (0..count)
        .map(|_| {
            let bumps = (0..rng.random_range(1..=3))
                .map(|_| Bump {
                    amplitude: rng.random_range(0.1..=2.0),
                    width: scale * rng.random_range(0.3..=1.2),
                    center: grid.periods().iter().map(|&l| l * rng.random::<f64>()).collect(),
                })
                .collect();
            sample_profile(
                grid,
                &Profile {
                    bumps,
                    ..Profile::default()
                },
            )
        })
        .collect()
}

/// Bracket of a sign change of a monotone `f` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub evaluations: usize,
}

/// Bisects `f(x) − target` on `[lo, hi]` until the bracket is narrower than
/// `width`. Returns `None` when the endpoints do not straddle the target.
pub fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, lo: f64, hi: f64, target: f64, width: f64) -> Result<Option<Bracket>> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    let mut evaluations = 2;
    if (fa - target).signum() == (fb - target).signum() {
        return Ok(None);
    }
    while b - a > width {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        evaluations += 1;
        if (fm - target).signum() == (fa - target).signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    Ok(Some(Bracket {
        lo: a,
        hi: b,
        f_lo: fa,
        f_hi: fb,
        evaluations,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MetricFamily, Stencil};
    use crate::spectral::t_min;
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::sync::OnceLock;

    struct Flat8 {
        m: Manifold,
        dec: SpectralDecomposition,
    }

    fn flat8() -> &'static Flat8 {
        static CELL: OnceLock<Flat8> = OnceLock::new();
        CELL.get_or_init(|| {
            let grid = GridSpec::cubic(3, 8, 2.0 * PI).unwrap();
            let m = Manifold::build(MetricFamily::Flat, grid, Stencil::Full).unwrap();
            let dec = eigendecompose(&m.laplacian, EigenOptions::full()).unwrap();
            Flat8 { m, dec }
        })
    }

    #[test]
    fn random_potentials_are_seeded() {
        let grid = GridSpec::cubic(3, 8, 2.0 * PI).unwrap();
        let a = random_bump_potentials(&grid, 4, 9);
        assert_eq!(a, random_bump_potentials(&grid, 4, 9));
        assert_ne!(a, random_bump_potentials(&grid, 4, 10));
        for v in &a {
            assert!(v.iter().all(|&x| x >= 0.0));
            assert!(v.iter().cloned().fold(0.0, f64::max) > 0.05);
        }
    }

    fn bump_field(m: &Manifold, amp: f64, width: f64, center: Vec<f64>) -> Vec<f64> {
        let prof = Profile::bump(amp, width, center);
        (0..m.grid.len()).map(|i| prof.value(&m.grid.coords(i), m.grid.periods())).collect()
    }

    fn ctx(f: &Flat8, kprime: f64) -> ReportContext {
        let params = f.m.params(4.0, 4.0);
        let adm = check_admissibility(&f.m, 4.0, AdmissibilityMode::Weak, None, LambdaScan::default()).unwrap();
        let tm = t_min(&f.dec, f.m.volume.total()).unwrap();
        ReportContext::new(params, kprime, &adm, f.m.volume.clone(), tm)
    }

    #[test]
    fn constants_give_closed_forms() {
        let f = flat8();
        let v = vec![0.7; 512];
        for alpha in [0.5, 1.0, 4.0] {
            assert!((c_kato_numeric(&f.dec, &v, alpha).unwrap() - 0.7 / alpha).abs() < 1e-10);
        }
        for beta in [0.25, 1.0, 2.0] {
            let b = b_kato_numeric(&f.dec, &v, beta, DEFAULT_QUAD_ORDER).unwrap();
            assert!((b - 0.7 * beta).abs() < 1e-10, "beta={beta}: {b}");
        }
        assert!(c_kato_numeric(&f.dec, &[-1.0; 512], 1.0).is_err());
    }

    #[test]
    fn c_kato_matches_dense_solve() {
        let f = flat8();
        let v = bump_field(&f.m, 1.0, 0.6, vec![1.0, 2.0, 3.0]);
        let alpha = 1.5;
        let n = v.len();
        let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
        let s = f.m.laplacian.stiffness();
        let w = f.m.laplacian.mass();
        for (i, row) in s.outer_iterator().enumerate() {
            for (j, val) in row.iter() {
                a[(i, j)] += val / w[i];
            }
            a[(i, i)] += alpha;
        }
        let u = a.lu().solve(&nalgebra::DVector::from_vec(v.clone())).unwrap();
        let oracle = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!((c_kato_numeric(&f.dec, &v, alpha).unwrap() - oracle).abs() < 1e-9 * oracle.max(1.0));
    }

    #[test]
    fn b_kato_self_converges() {
        let f = flat8();
        let v = bump_field(&f.m, 1.0, 0.8, vec![PI, PI, PI]);
        let a = b_kato_numeric(&f.dec, &v, 1.0, 16).unwrap();
        let b = b_kato_numeric(&f.dec, &v, 1.0, 32).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} {b}");
        let prof = b_kato_profile(&f.dec, &v, &[0.25, 0.5, 1.0, 2.0], 16).unwrap();
        assert!(prof.windows(2).all(|w| w[0] <= w[1]));
        assert!((prof[2] - a).abs() < 1e-8);
    }

    #[test]
    fn kato_relation_on_bumps() {
        let f = flat8();
        let v = bump_field(&f.m, 2.0, 0.5, vec![0.3, 4.0, 2.2]);
        let alphas = [0.5, 1.0, 2.0, 4.0, 8.0];
        let betas = [0.25, 0.5, 1.0, 2.0];
        let cs = c_kato_profile(&f.dec, &v, &alphas).unwrap();
        let bs = b_kato_profile(&f.dec, &v, &betas, DEFAULT_QUAD_ORDER).unwrap();
        assert!(cs.windows(2).all(|w| w[0] >= w[1]));
        for (&alpha, &c) in alphas.iter().zip(&cs) {
            for (&beta, &b) in betas.iter().zip(&bs) {
                for r in check_kato_relation(c, b, alpha, beta) {
                    assert!(r.verdict.is_verified(), "{r:?}");
                }
            }
        }
    }

    #[test]
    fn flat_admission_and_heat_bound() {
        let f = flat8();
        let adm = check_admissibility(&f.m, 4.0, AdmissibilityMode::Weak, None, LambdaScan::default()).unwrap();
        assert!(adm.admitted && adm.lhs == 0.0);
        let g = check_admissibility(&f.m, 4.0, AdmissibilityMode::Gallot, None, LambdaScan::default()).unwrap();
        assert!(g.admitted);
        let c = ctx(f, 1.0);
        let reps = check_heat_kernel_bound(&f.dec, &c, &[0.05, 0.75, 1.0, 1.5]).unwrap();
        assert!(reps[0].verdict.is_skipped());
        assert!(reps[1].verdict.is_verified() && reps[2].verdict.is_verified());
        assert!(reps[3].verdict.is_skipped());
        let stress = ctx(f, 1e-12);
        let reps = check_heat_kernel_bound(&f.dec, &stress, &[1.0]).unwrap();
        assert!(!reps[0].verdict.is_skipped());
    }

    #[test]
    fn kato_bounds_on_constants_always_hold() {
        let f = flat8();
        let c = ctx(f, 1.0);
        let v = vec![0.3; 512];
        for r in check_kato_bound(&f.dec, &v, &[0.5, 1.0, 8.0], &c).unwrap() {
            assert!(r.verdict.is_verified(), "{r:?}");
        }
        for r in check_bkato_bound(&f.dec, &v, &[0.25, 1.0, 2.0], &c).unwrap() {
            assert!(r.verdict.is_verified(), "{r:?}");
        }
    }

    #[test]
    fn positivity_on_constants() {
        let f = flat8();
        let reps = check_positivity(&f.m.laplacian, &f.dec, &vec![0.0; 512], 1.0).unwrap();
        assert!(reps[0].verdict.is_verified());
        assert!((reps[0].paper_rhs - 1.0).abs() < 1e-10);
        let reps = check_positivity(&f.m.laplacian, &f.dec, &vec![0.4; 512], 1.0).unwrap();
        assert!((reps[0].paper_rhs - 0.6).abs() < 1e-10);
        assert!(reps.iter().all(|r| r.verdict.is_verified()));
    }

    #[test]
    fn flat_vanishing_does_not_fire() {
        let f = flat8();
        let c = ctx(f, 1.0);
        let input = VanishingInputs {
            rho0: 0.5,
            well_mean: 0.5,
            schrodinger_min: 0.0,
        };
        let reps = check_vanishing_criterion(input, &c).unwrap();
        assert!(reps.iter().all(|r| r.verdict.is_skipped()));
    }

    #[test]
    fn l1_norm_of_constant_potentials() {
        let f = flat8();
        let zero = check_l1_l1(&f.m.laplacian, &vec![0.0; 512], 0.0, 1.0, &[0.5, 1.0]).unwrap();
        assert!(zero.iter().all(|r| r.verdict.is_verified()));
        assert!((zero[0].numeric_lhs - 1.0).abs() < 1e-10);
        let c = 0.5;
        let beta = 1.0;
        let reps = check_l1_l1(&f.m.laplacian, &vec![-c; 512], c * beta, beta, &[0.25, 1.0]).unwrap();
        for r in &reps {
            assert!(r.verdict.is_verified(), "{r:?}");
        }
        assert!((reps[0].numeric_lhs - (c * 0.25f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn ultracontractivity_endpoints() {
        let f = flat8();
        let c = ctx(f, 1.0);
        let reps = check_ultracontractivity(&f.dec, 0.0, 1.0, &[1.0, 2.0, f64::INFINITY], &[0.75, 1.0], &c).unwrap();
        for r in &reps {
            assert!(r.verdict.is_verified(), "{r:?}");
        }
        let sup = heat_kernel_sup(&f.dec, 0.75).unwrap();
        assert!((reps[0].numeric_lhs - sup).abs() < 1e-12 * sup);
        assert!((reps[4].numeric_lhs - 1.0).abs() < 1e-10);
        assert!((reps[4].paper_rhs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bisection_brackets_linear_crossing() {
        let br = bisect(|x| Ok(3.0 * x), 0.0, 1.0, 1.0, 1e-4).unwrap().unwrap();
        assert!(br.lo <= 1.0 / 3.0 && br.hi >= 1.0 / 3.0 && br.hi - br.lo <= 1e-4);
        assert!(bisect(|x| Ok(x), 2.0, 3.0, 1.0, 1e-3).unwrap().is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn c_kato_is_monotone_in_v(a in prop::collection::vec(0.0f64..1.0, 512), extra in prop::collection::vec(0.0f64..1.0, 512), alpha in 0.2f64..5.0) {
            let f = flat8();
            let b: Vec<f64> = a.iter().zip(&extra).map(|(x, y)| x + y).collect();
            let ca = c_kato_numeric(&f.dec, &a, alpha).unwrap();
            let cb = c_kato_numeric(&f.dec, &b, alpha).unwrap();
            prop_assert!(ca <= cb * (1.0 + 1e-12));
        }
    }
}

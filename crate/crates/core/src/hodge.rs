//! Bochner and Hodge Laplacians on 1-forms, harmonic dimension, semigroup
//! domination, trace comparison and the Betti bounds.
//!
//! A 1-form is stored with covariant components `ω_j` at node `x` in slot
//! `x·d + j`. The inner product is `⟨ω, η⟩ = Σ_x w_x g^{jj}(x) ω_j η_j`.

use nalgebra::DMatrix;

use crate::constants::{eval_betti_bound, eval_cbar_and_betti_lp, AdmissibleClass};
use crate::eigen::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::geometry::pointwise::christoffel;
use crate::geometry::{geometry_at, Derivatives, GridSpec, MetricField};
use crate::kato::ReportContext;
use crate::operator::{DiscreteOperator, StiffnessBuilder};
use crate::report::{BoundName, BoundReport, Relation};

/// Smallest ratio between the first uncounted eigenvalue and the largest
/// counted one for a harmonic count to be trusted.
pub const GAP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct HodgeOperator {
    dim: usize,
    /// `∇*∇`
    pub bochner: DiscreteOperator,
    /// `Δ¹ = ∇*∇ + Ric`
    pub hodge: DiscreteOperator,
    /// `Rⁱⱼ = g^{ik}R_{kj}` at every node.
    pub ricci_endo: Vec<DMatrix<f64>>,
    g_inv_diag: Vec<Vec<f64>>,
}

impl HodgeOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> usize {
        self.g_inv_diag.len()
    }

    /// `|ω|_g(x)` at every node.
    pub fn pointwise_norm(&self, omega: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim;
        if omega.len() != d * self.nodes() {
            return Err(Error::Shape {
                expected: d * self.nodes(),
                got: omega.len(),
            });
        }
        Ok(self
            .g_inv_diag
            .iter()
            .enumerate()
            .map(|(x, gi)| (0..d).map(|j| gi[j] * omega[x * d + j].powi(2)).sum::<f64>().sqrt())
            .collect())
    }
}

fn checked_diagonal(metric: &MetricField, x: &[f64]) -> Result<Vec<f64>> {
    let diag = metric.diagonal(x);
    if diag.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NotPositiveDefinite { point: x.to_vec() });
    }
    Ok(diag)
}

/// `∇*∇ = M⁻¹AᵀWA` where `A` is the staggered covariant derivative.
///
/// On the edge `x → x + hₖeₖ`, `(Aω)_{kj} = (ω_j(y) − ω_j(x))/hₖ −
/// Σₘ Γᵐ_{kj}(mid)·½(ω_m(x) + ω_m(y))`, weighted by
/// `√det g·g^{kk}g^{jj}` at the midpoint times the cell volume.
pub fn assemble_bochner(metric: &MetricField, grid: &GridSpec) -> Result<DiscreteOperator> {
    Ok(assemble(metric, grid, false)?.bochner)
}

/// `Δ¹ = ∇*∇ + Ric` together with its parts.
pub fn assemble_hodge1(metric: &MetricField, grid: &GridSpec) -> Result<HodgeOperator> {
    assemble(metric, grid, true)
}

fn assemble(metric: &MetricField, grid: &GridSpec, with_ricci: bool) -> Result<HodgeOperator> {
    let d = grid.dim();
    let n = grid.len();
    let cell = grid.cell_volume();
    let mut s = StiffnessBuilder::new(n * d);
    let mut mass = Vec::with_capacity(n * d);
    let mut g_inv_diag = Vec::with_capacity(n);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * d + 2);
    for x in 0..n {
        let cx = grid.coords(x);
        let diag = checked_diagonal(metric, &cx)?;
        let w = diag.iter().product::<f64>().sqrt() * cell;
        let gi: Vec<f64> = diag.iter().map(|v| 1.0 / v).collect();
        for j in 0..d {
            mass.push(w * gi[j]);
        }
        g_inv_diag.push(gi);
        for k in 0..d {
            let h = grid.spacing(k);
            let y = grid.neighbor(x, k, 1);
            let mut mid = cx.clone();
            mid[k] += 0.5 * h;
            let gm = checked_diagonal(metric, &mid)?;
            let sqrt_g = gm.iter().product::<f64>().sqrt();
            let gamma = if metric.is_translation_invariant() {
                None
            } else {
                let jet = metric.analytic_jet(&mid);
                let g_inv = DMatrix::from_fn(d, d, |a, b| if a == b { 1.0 / gm[a] } else { 0.0 });
                Some(christoffel(&g_inv, &jet.dg))
            };
            for j in 0..d {
                row.clear();
                row.push((y * d + j, 1.0 / h));
                row.push((x * d + j, -1.0 / h));
                if let Some(gamma) = &gamma {
                    for (m, gm_) in gamma.iter().enumerate() {
                        let c = 0.5 * gm_[(k, j)];
                        if c != 0.0 {
                            row.push((x * d + m, -c));
                            row.push((y * d + m, -c));
                        }
                    }
                }
                let weight = sqrt_g / (gm[k] * gm[j]) * cell;
                for &(a, va) in &row {
                    for &(b, vb) in &row {
                        s.add(a, b, weight * va * vb);
                    }
                }
            }
        }
    }
    let bochner = DiscreteOperator::new(s.finish(), mass.clone())?;
    let mut ricci_endo = Vec::new();
    let hodge = if with_ricci {
        let mut r = StiffnessBuilder::new(n * d);
        for x in 0..n {
            let cx = grid.coords(x);
            let pg = geometry_at(metric, &cx, Derivatives::Analytic)?;
            let w = pg.sqrt_det_g * cell;
            let block = &pg.g_inv * &pg.ricci * &pg.g_inv;
            for a in 0..d {
                for b in 0..d {
                    r.add(x * d + a, x * d + b, w * 0.5 * (block[(a, b)] + block[(b, a)]));
                }
            }
            ricci_endo.push(pg.ricci_endomorphism());
        }
        let ric = DiscreteOperator::new(r.finish(), mass)?;
        bochner.add_scaled(&ric, 1.0)?
    } else {
        bochner.clone()
    };
    Ok(HodgeOperator {
        dim: d,
        bochner,
        hodge,
        ricci_endo,
        g_inv_diag,
    })
}

/// Outcome of counting near-zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HarmonicCount {
    Determinate { count: usize, gap_factor: f64 },
    /// No gap of at least [`GAP_FACTOR`] separates the counted eigenvalues.
    Ambiguous { count: usize, gap_factor: f64 },
}

impl HarmonicCount {
    pub fn count(&self) -> Option<usize> {
        match self {
            HarmonicCount::Determinate { count, .. } => Some(*count),
            HarmonicCount::Ambiguous { .. } => None,
        }
    }

    pub fn gap_factor(&self) -> f64 {
        match self {
            HarmonicCount::Determinate { gap_factor, .. } | HarmonicCount::Ambiguous { gap_factor, .. } => *gap_factor,
        }
    }

    pub fn raw_count(&self) -> usize {
        match self {
            HarmonicCount::Determinate { count, .. } | HarmonicCount::Ambiguous { count, .. } => *count,
        }
    }
}

/// Number of eigenvalues with `|μ| < gap_tol`, trusted only when the first
/// uncounted eigenvalue exceeds the largest counted `|μ|` by [`GAP_FACTOR`].
pub fn harmonic_dim(values: &[f64], gap_tol: f64) -> HarmonicCount {
    let count = values.iter().take_while(|v| v.abs() < gap_tol || **v < 0.0).count();
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-12 * scale;
    let gap_factor = match values.get(count) {
        None => f64::INFINITY,
        Some(&next) if count == 0 => next / gap_tol,
        Some(&next) => {
            let largest = values[..count].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            next / largest.max(floor)
        }
    };
    if gap_factor >= GAP_FACTOR {
        HarmonicCount::Determinate { count, gap_factor }
    } else {
        HarmonicCount::Ambiguous { count, gap_factor }
    }
}

/// Largest pointwise excess `max_x(|e^{−tΔ¹}ω|_g − e^{−t(L+ρ)}|ω|_g)`,
/// relative to `max_x |ω|_g`, at each time.
pub fn domination_excess(
    dec_schrodinger: &SpectralDecomposition,
    dec_hodge: &SpectralDecomposition,
    hodge: &HodgeOperator,
    omega: &[f64],
    times: &[f64],
) -> Result<Vec<f64>> {
    let norm0 = hodge.pointwise_norm(omega)?;
    let scale = norm0.iter().fold(0.0f64, |m, v| m.max(*v));
    if scale == 0.0 {
        return Ok(vec![0.0; times.len()]);
    }
    let forms = dec_hodge.apply_family(times.len(), |j, l| (-l * times[j]).exp(), omega)?;
    let scalars = dec_schrodinger.apply_family(times.len(), |j, l| (-l * times[j]).exp(), &norm0)?;
    forms
        .iter()
        .zip(&scalars)
        .map(|(f, s)| {
            let lhs = hodge.pointwise_norm(f)?;
            Ok(lhs.iter().zip(s).fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b)) / scale)
        })
        .collect()
}

/// Domination at each time with absolute slack `slack` on the relative excess.
pub fn check_domination(
    dec_schrodinger: &SpectralDecomposition,
    dec_hodge: &SpectralDecomposition,
    hodge: &HodgeOperator,
    omega: &[f64],
    t_samples: &[f64],
    slack: f64,
    t_min: f64,
) -> Result<Vec<BoundReport>> {
    let trusted: Vec<f64> = t_samples.iter().copied().filter(|&t| t >= t_min && t > 0.0).collect();
    let excess = domination_excess(dec_schrodinger, dec_hodge, hodge, omega, &trusted)?;
    let mut out = Vec::new();
    for &t in t_samples {
        match trusted.iter().position(|&s| s == t) {
            Some(i) => out.push(
                BoundReport::compare_tol(BoundName::Domination, excess[i], 0.0, Relation::LessEq, 0.0, slack)
                    .with("t", t),
            ),
            None => out.push(
                BoundReport::skipped(BoundName::Domination, "t below mesh floor", f64::NAN, 0.0)
                    .with("t", t)
                    .extra("t_min", t_min),
            ),
        }
    }
    Ok(out)
}

/// `e ≈ C·h^q` from two meshes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackFit {
    pub constant: f64,
    pub order: f64,
}

impl SlackFit {
    pub fn fit(coarse: (f64, f64), fine: (f64, f64)) -> Self {
        let ((h1, e1), (h2, e2)) = (coarse, fine);
        let order = (e1 / e2).ln() / (h1 / h2).ln();
        SlackFit {
            constant: e2 / h2.powi(2),
            order,
        }
    }

    /// `C·h²`.
    pub fn slack(&self, h: f64) -> f64 {
        self.constant * h * h
    }
}

/// `tr e^{−tΔ¹} ≤ d·tr e^{−t(L+ρ)}` at each time.
pub fn check_trace_comparison(
    dec_schrodinger: &SpectralDecomposition,
    dec_hodge: &SpectralDecomposition,
    d: usize,
    t_samples: &[f64],
    t_min: f64,
) -> Vec<BoundReport> {
    t_samples
        .iter()
        .map(|&t| {
            let lhs = dec_hodge.trace_function(|l| (-l * t).exp());
            let rhs = d as f64 * dec_schrodinger.trace_function(|l| (-l * t).exp());
            if t < t_min {
                BoundReport::skipped(BoundName::TraceComparison, "t below mesh floor", lhs, rhs).with("t", t)
            } else {
                BoundReport::compare(BoundName::TraceComparison, lhs, rhs, Relation::LessEq).with("t", t)
            }
        })
        .collect()
}

/// `b₁` against both Betti bounds. `b` is `b_Kato(ρ₋, β)` and
/// `rho_minus_mean` is `⫶ρ₋⫶_p`; the context must come from weak admission.
pub fn check_betti_bounds(
    b1: Option<usize>,
    b: f64,
    beta: f64,
    rho_minus_mean: f64,
    ctx: &ReportContext,
) -> Result<Vec<BoundReport>> {
    let prov = ctx.provenance();
    let lhs = b1.map_or(f64::NAN, |c| c as f64);
    let gate = |name: BoundName| -> Option<BoundReport> {
        if b1.is_none() {
            Some(BoundReport::skipped(name, "harmonic dimension ambiguous", lhs, f64::NAN))
        } else if !ctx.admitted || ctx.class != AdmissibleClass::Weak {
            Some(BoundReport::skipped(name, "manifold not admitted", lhs, f64::NAN))
        } else {
            None
        }
    };
    let first = match gate(BoundName::BettiBound) {
        Some(r) => r,
        None if b >= 1.0 => BoundReport::skipped(BoundName::BettiBound, "b_kato >= 1", lhs, f64::NAN),
        None => {
            let rhs = eval_betti_bound(b, beta, &ctx.params, ctx.kprime)?;
            BoundReport::compare(BoundName::BettiBound, lhs, rhs, Relation::LessEq)
        }
    }
    .with_all(&prov)
    .with("beta", beta)
    .extra("b", b);
    let (cbar, bound) = if ctx.params.delta < 2.0 * ctx.params.p {
        eval_cbar_and_betti_lp(rho_minus_mean, &ctx.params, ctx.kprime)?
    } else {
        (f64::NAN, None)
    };
    let second = match (gate(BoundName::BettiBoundLp), bound) {
        (Some(r), _) => r,
        (None, None) => BoundReport::skipped(BoundName::BettiBoundLp, "cbar * mean(rho_-) >= 1", lhs, f64::NAN),
        (None, Some(rhs)) => BoundReport::compare(BoundName::BettiBoundLp, lhs, rhs, Relation::LessEq),
    }
    .with_all(&prov)
    .extra("cbar", cbar)
    .extra("rho_minus_mean_p", rho_minus_mean);
    Ok(vec![first, second])
}

/// On a manifold with harmonic 1-forms the vanishing hypothesis must fail:
/// `threshold ≤ ⫶(ρ−ρ₀)₋⫶_p`.
pub fn check_vanishing_contrapositive(b1: Option<usize>, well_mean: f64, threshold: f64, rho0: f64) -> BoundReport {
    let report = match b1 {
        Some(c) if c > 0 => BoundReport::compare_tol(
            BoundName::VanishingContrapositive,
            threshold,
            well_mean,
            Relation::LessEq,
            0.0,
            0.0,
        ),
        Some(_) => BoundReport::skipped(BoundName::VanishingContrapositive, "no harmonic forms", threshold, well_mean),
        None => BoundReport::skipped(
            BoundName::VanishingContrapositive,
            "harmonic dimension ambiguous",
            threshold,
            well_mean,
        ),
    };
    report.with("rho0", rho0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{eigendecompose, EigenOptions};
    use crate::geometry::{MetricFamily, Profile};
    use crate::spectral::assemble_laplacian;
    use std::f64::consts::PI;

    fn grid(n: usize) -> GridSpec {
        GridSpec::cubic(3, n, 2.0 * PI).unwrap()
    }

    fn conformal(eps: f64, g: &GridSpec) -> MetricField {
        let profile = Profile::bump(eps, 0.9, vec![PI, PI, PI]);
        MetricField::new(MetricFamily::Conformal { profile }, g).unwrap()
    }

    #[test]
    fn flat_is_three_scalar_copies() {
        let g = grid(8);
        let m = MetricField::flat(&g);
        let h = assemble_hodge1(&m, &g).unwrap();
        let vals = eigendecompose(&h.hodge, EigenOptions::values_only()).unwrap();
        let scalar = eigendecompose(&assemble_laplacian(&m, &g).unwrap(), EigenOptions::values_only()).unwrap();
        assert_eq!(vals.block_count(), 3);
        let mut tripled: Vec<f64> = scalar.eigenvalues().iter().flat_map(|&v| [v, v, v]).collect();
        tripled.sort_by(f64::total_cmp);
        for (a, b) in vals.eigenvalues().iter().zip(&tripled) {
            assert!((a - b).abs() < 1e-9);
        }
        let count = harmonic_dim(vals.eigenvalues(), 0.1);
        assert_eq!(count.count(), Some(3));
    }

    #[test]
    fn self_adjoint_for_conformal_metrics() {
        let g = grid(8);
        let m = conformal(0.3, &g);
        let h = assemble_hodge1(&m, &g).unwrap();
        assert!(h.hodge.asymmetry() < 1e-12);
        let n = h.hodge.len();
        let a: Vec<f64> = (0..n).map(|i| ((i * 7 % 13) as f64).sin()).collect();
        let b: Vec<f64> = (0..n).map(|i| ((i * 5 % 11) as f64).cos()).collect();
        let lhs = h.hodge.inner(&h.hodge.apply(&a).unwrap(), &b).unwrap();
        let rhs = h.hodge.inner(&a, &h.hodge.apply(&b).unwrap()).unwrap();
        let scale = h.hodge.norm(&a).unwrap() * h.hodge.norm(&b).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * scale);
        let bochner = eigendecompose(&h.bochner, EigenOptions::values_only()).unwrap();
        assert!(bochner.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn constant_conformal_factor_scales_spectrum() {
        let g = grid(8);
        let c = 0.4;
        let m = MetricField::new(
            MetricFamily::Conformal {
                profile: Profile::constant(c),
            },
            &g,
        )
        .unwrap();
        let scaled = eigendecompose(&assemble_bochner(&m, &g).unwrap(), EigenOptions::values_only()).unwrap();
        let flat = eigendecompose(&assemble_bochner(&MetricField::flat(&g), &g).unwrap(), EigenOptions::values_only())
            .unwrap();
        for (a, b) in scaled.eigenvalues().iter().zip(flat.eigenvalues()) {
            assert!((a - (-2.0 * c).exp() * b).abs() < 1e-9 * (1.0 + b));
        }
    }

    #[test]
    fn small_perturbation_keeps_three_harmonic_forms() {
        let g = grid(8);
        let m = conformal(0.1, &g);
        let h = assemble_hodge1(&m, &g).unwrap();
        let vals = eigendecompose(&h.hodge, EigenOptions::values_only()).unwrap();
        assert_eq!(harmonic_dim(vals.eigenvalues(), 0.1).count(), Some(3));
    }

    #[test]
    fn harmonic_count_outcomes() {
        let exact = harmonic_dim(&[1e-14, 2e-14, 1.0], 1e-3);
        assert_eq!(exact.count(), Some(2));
        assert!((exact.gap_factor() - 1e12).abs() < 1.0);
        assert!(harmonic_dim(&[1e-3, 5e-3, 1.0], 1e-2).count().is_some());
        assert!(harmonic_dim(&[1e-3, 5e-3, 2e-2], 1e-2).count().is_none());
        assert_eq!(harmonic_dim(&[1.0, 2.0], 0.01).count(), Some(0));
    }

    #[test]
    fn flat_domination_and_traces() {
        let g = grid(8);
        let m = MetricField::flat(&g);
        let h = assemble_hodge1(&m, &g).unwrap();
        let dh = eigendecompose(&h.hodge, EigenOptions::full()).unwrap();
        let ds = eigendecompose(&assemble_laplacian(&m, &g).unwrap(), EigenOptions::full()).unwrap();
        let n = g.len();
        let constant: Vec<f64> = (0..n).flat_map(|_| [1.0, 0.5, -0.3]).collect();
        let ex = domination_excess(&ds, &dh, &h, &constant, &[0.5, 1.0]).unwrap();
        assert!(ex.iter().all(|e| e.abs() < 1e-9));
        let mode: Vec<f64> = (0..n)
            .flat_map(|x| {
                let c = g.coords(x);
                [c[1].cos(), 0.0, (c[0] + c[2]).sin()]
            })
            .collect();
        for r in check_domination(&ds, &dh, &h, &mode, &[0.1, 0.75, 1.0], 1e-9, 0.5).unwrap() {
            assert!(!r.verdict.is_violated(), "{r:?}");
        }
        for r in check_trace_comparison(&ds, &dh, 3, &[0.75, 1.0, 20.0], 0.5) {
            assert!((r.numeric_lhs - r.paper_rhs).abs() < 1e-9 * r.paper_rhs);
            assert!(r.verdict.is_verified());
        }
        let late = dh.trace_function(|l| (-l * 20.0).exp());
        assert!((late - 3.0).abs() < 1e-6);
    }

    #[test]
    fn slack_fit_recovers_order() {
        let fit = SlackFit::fit((0.5, 0.25 * 3.0), (0.25, 0.0625 * 3.0));
        assert!((fit.order - 2.0).abs() < 1e-12);
        assert!((fit.slack(0.25) - 0.1875).abs() < 1e-12);
    }

    #[test]
    fn contrapositive_logic() {
        assert!(check_vanishing_contrapositive(Some(3), 0.5, 0.01, 0.5).verdict.is_verified());
        assert!(check_vanishing_contrapositive(Some(3), 0.001, 0.01, 0.5).verdict.is_violated());
        assert!(check_vanishing_contrapositive(Some(0), 0.001, 0.01, 0.5).verdict.is_skipped());
    }
}

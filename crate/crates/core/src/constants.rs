//! Closed-form constants of the Kato-class heat-kernel analysis.
//!
//! Everything here is a pure function of its arguments: no discretization,
//! no geometry. Standing hypotheses (`δ > d ≥ 3`, `δ < 2p`, positivity of
//! lengths and times) are enforced as [`Error::Domain`] errors rather than
//! propagated as NaN.
//!
//! The kernel constant `K′(δ)` is not known in closed form and is always an
//! explicit argument (`kprime`); callers record the value they used.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quadrature::adaptive_gk;

/// Default relative tolerance for [`eval_i`].
pub const DEFAULT_I_RELTOL: f64 = 1e-10;

/// Relative slack used when a computed quantity is compared to a threshold.
pub const THRESHOLD_RELTOL: f64 = 1e-9;

/// Parameter tuple threaded through every formula.
///
/// `d` dimension, `delta` effective dimension, `p` integrability exponent,
/// `diameter` the diameter bound `D`, `lambda` the curvature level,
/// `alpha` the resolvent shift, `beta` the time horizon, `rho0` the
/// curvature floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub d: usize,
    pub delta: f64,
    pub p: f64,
    pub diameter: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho0: f64,
}

impl SpectralParams {
    /// Parameters with `p = δ` (so `δ < 2p`) and unit `λ, α, β, ρ₀`.
    pub fn new(d: usize, delta: f64, diameter: f64) -> Self {
        SpectralParams {
            d,
            delta,
            p: delta,
            diameter,
            lambda: 1.0,
            alpha: 1.0,
            beta: 1.0,
            rho0: 1.0,
        }
    }

    pub fn check_dimension(&self) -> Result<()> {
        if self.d < 3 {
            return Err(domain("dimension", "d >= 3", format!("d = {}", self.d)));
        }
        if !(self.delta > self.d as f64) {
            return Err(domain(
                "effective dimension",
                "delta > d",
                format!("delta = {}, d = {}", self.delta, self.d),
            ));
        }
        Ok(())
    }

    pub fn check_integrability(&self) -> Result<()> {
        check_integrability(self.delta, self.p)
    }

    pub fn check_diameter(&self) -> Result<()> {
        positive("diameter D", self.diameter)
    }

    /// Every invariant of the tuple at once.
    pub fn validate(&self) -> Result<()> {
        self.check_dimension()?;
        self.check_integrability()?;
        self.check_diameter()?;
        positive("curvature level lambda", self.lambda)?;
        positive("resolvent shift alpha", self.alpha)?;
        positive("time horizon beta", self.beta)?;
        positive("curvature floor rho0", self.rho0)
    }
}

fn positive(quantity: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(domain(quantity, "a finite value > 0", format!("{value}")))
    }
}

fn check_integrability(delta: f64, p: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 2.0 * p) {
        return Err(domain(
            "integrability exponent",
            "0 < delta < 2p",
            format!("delta = {delta}, p = {p}"),
        ));
    }
    Ok(())
}

fn check_kprime(kprime: f64) -> Result<()> {
    positive("kernel constant K'", kprime)
}

fn check_b(b: f64) -> Result<()> {
    if !(0.0..1.0).contains(&b) {
        return Err(domain("Kato constant b", "0 <= b < 1", format!("b = {b}")));
    }
    Ok(())
}

/// Which heat-kernel bound class a manifold is admitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibleClass {
    /// `𝓜(δ, D, d)`: constant `K(δ)·D^{δ/2}`.
    Weak,
    /// `𝓜(λ, δ, D, d)`: constant `K(λ, δ, D, d)` at `params.lambda`.
    Level,
}

/// `B(δ, d)`, the structural constant of the Gallot curvature condition.
pub fn eval_b(params: &SpectralParams) -> Result<f64> {
    params.check_dimension()?;
    let delta = params.delta;
    let d = params.d as f64;
    Ok((2.0 * (delta - 1.0) / delta).sqrt()
        * (d - 1.0).powf(1.0 - 1.0 / delta)
        * ((delta - 2.0) / (delta - d)).powf(0.5 - 1.0 / delta))
}

/// `γ(λ, δ, D, d) = B·λ·min{2^{−1/(δ−1)}, 1/(4(e^{λBD}−1))}`.
pub fn eval_gamma(params: &SpectralParams) -> Result<f64> {
    let b = eval_b(params)?;
    params.check_diameter()?;
    positive("curvature level lambda", params.lambda)?;
    let lam = params.lambda;
    let first = 2f64.powf(-1.0 / (params.delta - 1.0));
    let second = 0.25 / (lam * b * params.diameter).exp_m1();
    Ok(b * lam * first.min(second))
}

/// Right-hand side of the Gallot curvature condition, `½·λ^δ/(e^{λBD}−1)`.
pub fn eval_gallot_rhs(params: &SpectralParams) -> Result<f64> {
    let b = eval_b(params)?;
    params.check_diameter()?;
    positive("curvature level lambda", params.lambda)?;
    let lam = params.lambda;
    let denom = (lam * b * params.diameter).exp_m1();
    if denom.is_infinite() {
        return Ok(0.0);
    }
    Ok(0.5 * lam.powf(params.delta) / denom)
}

/// The level `λ = (δ−1)/(B·D)` at which the weak condition implies the
/// Gallot condition.
pub fn weak_level(params: &SpectralParams) -> Result<f64> {
    let b = eval_b(params)?;
    params.check_diameter()?;
    Ok((params.delta - 1.0) / (b * params.diameter))
}

/// Admissibility threshold on `⫶ρ₋⫶_{δ/2}` defining `𝓜(δ, D, d)`.
pub fn eval_weak_threshold(params: &SpectralParams) -> Result<f64> {
    let b = eval_b(params)?;
    params.check_diameter()?;
    let delta = params.delta;
    let d = params.d as f64;
    let ratio = (delta - 1.0) / (b * params.diameter);
    Ok((d - 1.0) * (2.0 * (delta - 1.0).exp_m1()).powf(-2.0 / delta) * ratio * ratio)
}

/// `K(δ) = K′(δ)·(4(e^{δ−1}−1)/(δ−1))^{δ/2}`.
pub fn eval_k(params: &SpectralParams, kprime: f64) -> Result<f64> {
    params.check_dimension()?;
    check_kprime(kprime)?;
    let delta = params.delta;
    Ok(kprime * (4.0 * (delta - 1.0).exp_m1() / (delta - 1.0)).powf(0.5 * delta))
}

/// `K(λ, δ, D, d) = K′(δ)·γ^{−δ/2}`.
pub fn eval_k_lambda(params: &SpectralParams, kprime: f64) -> Result<f64> {
    check_kprime(kprime)?;
    let gamma = eval_gamma(params)?;
    Ok(kprime * gamma.powf(-0.5 * params.delta))
}

/// `1 + K(δ)·D^{δ/2}` (weak class) or `1 + K(λ, δ, D, d)` (level class):
/// the numerator of every heat-kernel bound.
pub fn heat_factor(params: &SpectralParams, kprime: f64, class: AdmissibleClass) -> Result<f64> {
    match class {
        AdmissibleClass::Weak => {
            params.check_diameter()?;
            Ok(1.0 + eval_k(params, kprime)? * params.diameter.powf(0.5 * params.delta))
        }
        AdmissibleClass::Level => Ok(1.0 + eval_k_lambda(params, kprime)?),
    }
}

/// `I(α, δ, p) = ∫₀^∞ e^{−αt}(t^{−δ/2p} ∨ 1) dt`.
///
/// The singular piece on `(0, 1]` is integrated after `u = t^{1−s}`
/// (`s = δ/2p`), which turns `e^{−αt}t^{−s}dt` into the bounded integrand
/// `e^{−α u^{1/(1−s)}}/(1−s) du`; the tail is `e^{−α}/α` exactly.
pub fn eval_i(alpha: f64, delta: f64, p: f64, reltol: f64) -> Result<f64> {
    positive("resolvent shift alpha", alpha)?;
    check_integrability(delta, p)?;
    let s = delta / (2.0 * p);
    let q = 1.0 / (1.0 - s);
    let tail = (-alpha).exp() / alpha;
    let singular = adaptive_gk(
        |u: f64| q * (-alpha * u.powf(q)).exp(),
        0.0,
        1.0,
        0.5 * reltol,
        1e-300,
        2000,
    )?;
    Ok(singular.value + tail)
}

/// Lower and upper bounds on `I(α, δ, p)`:
/// `1/α ≤ I ≤ α^{s−1}(2p/(2p−δ) + α^{−s}e^{−α})`, `s = δ/2p`.
pub fn i_bounds(alpha: f64, delta: f64, p: f64) -> Result<(f64, f64)> {
    positive("resolvent shift alpha", alpha)?;
    check_integrability(delta, p)?;
    let s = delta / (2.0 * p);
    let upper = alpha.powf(s - 1.0) * (2.0 * p / (2.0 * p - delta) + alpha.powf(-s) * (-alpha).exp());
    Ok((1.0 / alpha, upper))
}

/// `J(β, δ, p) = ∫₀^β (t^{−δ/2p} ∨ 1) dt`, in closed form.
pub fn eval_j(beta: f64, delta: f64, p: f64) -> Result<f64> {
    positive("time horizon beta", beta)?;
    check_integrability(delta, p)?;
    let scale = 2.0 * p / (2.0 * p - delta);
    if beta <= 1.0 {
        Ok(scale * beta.powf((2.0 * p - delta) / (2.0 * p)))
    } else {
        Ok(scale + beta - 1.0)
    }
}

/// `c(p, d)`, the δ-free admissibility constant with `δ = p + d/2`.
///
/// The exponent `−4/(2p+d−2)` is kept verbatim; it is strictly more negative
/// than the `−2/δ = −4/(2p+d)` of [`eval_weak_threshold`], so `c(p, d)` is
/// slightly smaller than the weak threshold at `δ = p + d/2, D = 1`.
pub fn eval_c_pd(p: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    if !(p > 0.5 * df) {
        return Err(domain("c(p,d)", "p > d/2", format!("p = {p}, d = {d}")));
    }
    let delta = p + 0.5 * df;
    let b = eval_b(&SpectralParams::new(d, delta, 1.0))?;
    let ratio = (delta - 1.0) / b;
    Ok((df - 1.0) * ratio * ratio * (2.0 * (delta - 1.0).exp_m1()).powf(-4.0 / (2.0 * p + df - 2.0)))
}

/// Growth constants of a perturbed semigroup on `L¹`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoigtConstants {
    /// `C = 1/(1−b)`
    pub c: f64,
    /// `ω = log(1/(1−b))/β`
    pub omega: f64,
}

pub fn eval_voigt(b: f64, beta: f64) -> Result<VoigtConstants> {
    check_b(b)?;
    positive("time horizon beta", beta)?;
    let c = 1.0 / (1.0 - b);
    Ok(VoigtConstants {
        c,
        omega: -(-b).ln_1p() / beta,
    })
}

/// Exponent `(1 + 1/β)(1+b)/(1−b) + δ/2` of the `2/(1−b)` factor.
fn ultra_exponent(b: f64, beta: f64, delta: f64) -> f64 {
    (1.0 + 1.0 / beta) * (1.0 + b) / (1.0 - b) + 0.5 * delta
}

/// `c(b, β, δ, D, d, Vol)`, the `L¹ → L^∞` constant of `e^{−t(Δ+V)}`.
pub fn eval_ultra_constant(
    b: f64,
    beta: f64,
    params: &SpectralParams,
    kprime: f64,
    vol: f64,
    class: AdmissibleClass,
) -> Result<f64> {
    check_b(b)?;
    positive("time horizon beta", beta)?;
    positive("volume", vol)?;
    let factor = heat_factor(params, kprime, class)?;
    Ok((2.0 / (1.0 - b)).powf(ultra_exponent(b, beta, params.delta)) * factor / vol)
}

/// Upper bound on the first Betti number from `b = b_Kato(ρ₋, β) < 1`.
pub fn eval_betti_bound(b: f64, beta: f64, params: &SpectralParams, kprime: f64) -> Result<f64> {
    check_b(b)?;
    positive("time horizon beta", beta)?;
    let factor = heat_factor(params, kprime, AdmissibleClass::Weak)?;
    Ok(params.d as f64 * (2.0 / (1.0 - b)).powf(ultra_exponent(b, beta, params.delta)) * factor)
}

/// `c̄ = 2p/(2p−δ)·(1 + K(δ)D^{δ/2})^{1/p}` and, when `c̄·⫶ρ₋⫶_p < 1`, the
/// resulting Betti bound (else `None`: the hypothesis fails, not an error).
pub fn eval_cbar_and_betti_lp(
    rho_norm_p: f64,
    params: &SpectralParams,
    kprime: f64,
) -> Result<(f64, Option<f64>)> {
    params.check_integrability()?;
    if !(rho_norm_p >= 0.0) {
        return Err(domain("L^p mean of rho_-", ">= 0", format!("{rho_norm_p}")));
    }
    let p = params.p;
    let factor = heat_factor(params, kprime, AdmissibleClass::Weak)?;
    let cbar = 2.0 * p / (2.0 * p - params.delta) * factor.powf(1.0 / p);
    let b = cbar * rho_norm_p;
    if b >= 1.0 {
        return Ok((cbar, None));
    }
    let exponent = 2.0 * (1.0 + b) / (1.0 - b) + 0.5 * params.delta;
    Ok((cbar, Some(params.d as f64 * (2.0 / (1.0 - b)).powf(exponent) * factor)))
}

/// Upper bound on `c_Kato(V, α)` from the `L^p` mean of `V`.
pub fn eval_kato_bound_rhs(
    v_norm_p: f64,
    alpha: f64,
    params: &SpectralParams,
    kprime: f64,
    class: AdmissibleClass,
) -> Result<f64> {
    let factor = heat_factor(params, kprime, class)?;
    let i = eval_i(alpha, params.delta, params.p, DEFAULT_I_RELTOL)?;
    Ok(factor.powf(1.0 / params.p) * i * v_norm_p)
}

/// Upper bound on `b_Kato(V, β)` from the `L^p` mean of `V`.
pub fn eval_bkato_bound_rhs(
    v_norm_p: f64,
    beta: f64,
    params: &SpectralParams,
    kprime: f64,
    class: AdmissibleClass,
) -> Result<f64> {
    let factor = heat_factor(params, kprime, class)?;
    let j = eval_j(beta, params.delta, params.p)?;
    Ok(factor.powf(1.0 / params.p) * j * v_norm_p)
}

/// Thresholds on `⫶(ρ−ρ₀)₋⫶_p` that make `Δ + ρ` positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VanishingThresholds {
    /// `(1 + K(δ)D^{δ/2})^{−1/p} / I(ρ₀, δ, p)` at the given δ.
    pub exact: f64,
    /// `min{c(p,d)D⁻², (1 + K(δ′)D^{δ′/2})^{−1/p} / I(ρ₀, δ′, p)}`, `δ′ = p + d/2`.
    pub auto_delta: f64,
    /// The closed-form `ρ₀ ≤ 1` replacement of the second entry of `auto_delta`:
    /// `(2p−d)/(6p−d)·ρ₀^{(2p−d)/4p}·(1 + K(δ′)D^{δ′/2})^{−1/p}`.
    /// `None` when `ρ₀ > 1`.
    pub simplified: Option<f64>,
    /// Whether `simplified` is really below the exact `δ′` threshold it
    /// replaces. It is not for small `ρ₀`, where the dropped `e^{−ρ₀}/ρ₀`
    /// tail of `I` dominates.
    pub simplified_sound: Option<bool>,
}

pub fn eval_er_threshold(rho0: f64, params: &SpectralParams, kprime: f64) -> Result<VanishingThresholds> {
    positive("curvature floor rho0", rho0)?;
    params.check_dimension()?;
    params.check_integrability()?;
    let p = params.p;
    let d = params.d as f64;
    let factor = heat_factor(params, kprime, AdmissibleClass::Weak)?;
    let exact = factor.powf(-1.0 / p) / eval_i(rho0, params.delta, p, DEFAULT_I_RELTOL)?;

    let auto = SpectralParams {
        delta: p + 0.5 * d,
        ..*params
    };
    let auto_factor = heat_factor(&auto, kprime, AdmissibleClass::Weak)?;
    let auto_kato = auto_factor.powf(-1.0 / p) / eval_i(rho0, auto.delta, p, DEFAULT_I_RELTOL)?;
    let c_pd = eval_c_pd(p, params.d)? / (params.diameter * params.diameter);
    let simplified = (rho0 <= 1.0).then(|| {
        (2.0 * p - d) / (6.0 * p - d) * rho0.powf((2.0 * p - d) / (4.0 * p)) * auto_factor.powf(-1.0 / p)
    });
    Ok(VanishingThresholds {
        exact,
        auto_delta: c_pd.min(auto_kato),
        simplified,
        simplified_sound: simplified.map(|s| s <= auto_kato),
    })
}

/// All derived constants for one parameter tuple, `K′`, Kato constant `b`
/// and volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantBundle {
    pub b_structural: f64,
    pub gamma: f64,
    pub kprime: f64,
    pub k_delta: f64,
    pub k_lambda: f64,
    pub i_val: f64,
    pub j_val: f64,
    pub c_pd: Option<f64>,
    pub c_voigt: f64,
    pub omega_voigt: f64,
    /// `½(1 + 1/b)`; undefined for `b = 0`.
    pub kappa0: Option<f64>,
    pub k_conj: u64,
    pub c_ultra: f64,
    pub cbar: f64,
}

impl ConstantBundle {
    pub fn evaluate(params: &SpectralParams, kprime: f64, b: f64, vol: f64) -> Result<Self> {
        params.validate()?;
        check_b(b)?;
        let voigt = eval_voigt(b, params.beta)?;
        let factor = heat_factor(params, kprime, AdmissibleClass::Weak)?;
        let k0 = (1.0 + b) / (1.0 - b);
        Ok(ConstantBundle {
            b_structural: eval_b(params)?,
            gamma: eval_gamma(params)?,
            kprime,
            k_delta: eval_k(params, kprime)?,
            k_lambda: eval_k_lambda(params, kprime)?,
            i_val: eval_i(params.alpha, params.delta, params.p, DEFAULT_I_RELTOL)?,
            j_val: eval_j(params.beta, params.delta, params.p)?,
            c_pd: eval_c_pd(params.p, params.d).ok(),
            c_voigt: voigt.c,
            omega_voigt: voigt.omega,
            kappa0: (b > 0.0).then(|| 0.5 * (1.0 + 1.0 / b)),
            k_conj: k0.ceil() as u64,
            c_ultra: eval_ultra_constant(b, params.beta, params, kprime, vol, AdmissibleClass::Weak)?,
            cbar: 2.0 * params.p / (2.0 * params.p - params.delta) * factor.powf(1.0 / params.p),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use approx::assert_relative_eq;

    // Reference values below come from 50-digit mpmath evaluations of the
    // displayed formulas.

    fn p43() -> SpectralParams {
        SpectralParams::new(3, 4.0, 1.0)
    }

    #[test]
    fn structural_constant() {
        assert_relative_eq!(eval_b(&p43()).unwrap(), 2.449_489_742_783_178, max_relative = 1e-14);
        assert_relative_eq!(eval_b(&p43()).unwrap(), 2.0 * 1.5f64.sqrt(), max_relative = 1e-14);
        let b6 = eval_b(&SpectralParams::new(3, 6.0, 1.0)).unwrap();
        assert_relative_eq!(b6, 2.531_797_403_082_471_8, max_relative = 1e-14);
        // diverges like (δ−d)^{−(1/2−1/δ)} as δ → d⁺
        let near: Vec<f64> = [1e-3, 1e-6, 1e-12]
            .iter()
            .map(|eps| eval_b(&SpectralParams::new(3, 3.0 + eps, 1.0)).unwrap())
            .collect();
        assert!(near[0] < near[1] && near[1] < near[2] && near[2] > 100.0);
    }

    #[test]
    fn structural_constant_rejects_delta_at_or_below_d() {
        for delta in [3.0, 2.5] {
            let err = eval_b(&SpectralParams::new(3, delta, 1.0)).unwrap_err();
            assert!(matches!(err, Error::Domain { hypothesis: "delta > d", .. }));
        }
        assert!(eval_b(&SpectralParams::new(2, 4.0, 1.0)).is_err());
    }

    #[test]
    fn gamma_at_weak_level_matches_closed_form() {
        let mut params = p43();
        params.diameter = 1.7;
        params.lambda = weak_level(&params).unwrap();
        let expected = (params.delta - 1.0) / (4.0 * params.diameter * (params.delta - 1.0).exp_m1());
        assert_relative_eq!(eval_gamma(&params).unwrap(), expected, max_relative = 1e-13);
        params.diameter = 1.0;
        params.lambda = weak_level(&params).unwrap();
        assert_relative_eq!(eval_gamma(&params).unwrap(), 0.039_296_772_368_441_96, max_relative = 1e-13);
    }

    #[test]
    fn gamma_small_lambda_uses_first_branch() {
        let mut params = p43();
        params.lambda = 1e-9;
        let b = eval_b(&params).unwrap();
        assert_relative_eq!(
            eval_gamma(&params).unwrap(),
            b * 1e-9 * 2f64.powf(-1.0 / 3.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn gamma_branch_by_branch() {
        let mut params = p43();
        params.lambda = 1.0;
        let b = 2.0 * 1.5f64.sqrt();
        let first = b * 2f64.powf(-1.0 / 3.0);
        let second = b * 0.25 / (b.exp() - 1.0);
        assert_relative_eq!(eval_gamma(&params).unwrap(), first.min(second), max_relative = 1e-13);
        assert_relative_eq!(eval_gamma(&params).unwrap(), 0.057_866_873_238_594_24, max_relative = 1e-13);
    }

    #[test]
    fn gallot_rhs_vanishes_at_both_ends_and_peaks_inside() {
        let mut params = p43();
        params.lambda = 1e-3;
        assert!(eval_gallot_rhs(&params).unwrap() < 1e-8);
        params.lambda = 1e3;
        assert_eq!(eval_gallot_rhs(&params).unwrap(), 0.0);
        // grid scan then golden refinement
        let f = |lam: f64| eval_gallot_rhs(&SpectralParams { lambda: lam, ..p43() }).unwrap();
        let (mut best, mut arg) = (0.0, 0.0);
        for k in 1..=10_000 {
            let lam = 50.0 * k as f64 / 10_000.0;
            if f(lam) > best {
                best = f(lam);
                arg = lam;
            }
        }
        let (mut lo, mut hi) = (arg - 0.005, arg + 0.005);
        for _ in 0..100 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(m1) < f(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        assert_relative_eq!(0.5 * (lo + hi), 1.600_615_151_144_943_9, max_relative = 1e-6);
        assert_relative_eq!(f(0.5 * (lo + hi)), 0.066_386_678_046_333_62, max_relative = 1e-10);
    }

    #[test]
    fn weak_threshold_values_and_scaling() {
        assert_relative_eq!(eval_weak_threshold(&p43()).unwrap(), 0.485_572_480_903_368_1, max_relative = 1e-13);
        let p = SpectralParams::new(3, 5.0, 2.0);
        assert_relative_eq!(eval_weak_threshold(&p).unwrap(), 0.199_340_405_582_060_28, max_relative = 1e-13);
        let one = eval_weak_threshold(&SpectralParams::new(3, 5.0, 1.0)).unwrap();
        assert_relative_eq!(eval_weak_threshold(&p).unwrap(), one / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn weak_threshold_is_gallot_rhs_at_weak_level() {
        for (delta, diam) in [(4.0, 1.0), (5.5, 0.3), (3.2, 7.0)] {
            let mut params = SpectralParams::new(3, delta, diam);
            params.lambda = weak_level(&params).unwrap();
            let rhs = eval_gallot_rhs(&params).unwrap();
            let implied = 2.0 * rhs.powf(2.0 / delta);
            assert_relative_eq!(eval_weak_threshold(&params).unwrap(), implied, max_relative = 1e-12);
        }
    }

    #[test]
    fn kernel_constants() {
        assert_relative_eq!(eval_k(&p43(), 1.0).unwrap(), 647.569_279_371_306_3, max_relative = 1e-13);
        assert_relative_eq!(
            eval_k(&SpectralParams::new(3, 5.0, 1.0), 1.0).unwrap(),
            21_031.705_901_621_977,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            eval_k(&p43(), 2.0).unwrap(),
            2.0 * eval_k(&p43(), 1.0).unwrap(),
            max_relative = 1e-15
        );
        assert!(eval_k(&p43(), 0.0).is_err());
        let mut params = p43();
        params.lambda = 1.0;
        assert_relative_eq!(eval_k_lambda(&params, 1.0).unwrap(), 298.634_492_135_216, max_relative = 1e-12);
    }

    #[test]
    fn level_constant_at_weak_level_equals_weak_constant() {
        for diam in [0.5, 1.0, 3.0] {
            let mut params = SpectralParams::new(3, 4.5, diam);
            params.lambda = weak_level(&params).unwrap();
            let weak = heat_factor(&params, 1.3, AdmissibleClass::Weak).unwrap();
            let level = heat_factor(&params, 1.3, AdmissibleClass::Level).unwrap();
            assert_relative_eq!(weak, level, max_relative = 1e-12);
        }
        let mut params = p43();
        params.lambda = 1e-3;
        let small = eval_k_lambda(&params, 1.0).unwrap();
        params.lambda = 1e-6;
        assert!(eval_k_lambda(&params, 1.0).unwrap() > small);
    }

    #[test]
    fn i_values() {
        let cases = [
            (1.0, 4.0, 4.0, 1.861_527_706_796_296_4),
            (2.0, 3.5, 2.0, 6.925_582_007_095_282),
            (0.1, 5.0, 3.0, 14.964_915_939_467_509),
            (0.01, 3.5, 2.0, 106.996_117_962_207_19),
        ];
        for (a, delta, p, expected) in cases {
            let v = eval_i(a, delta, p, DEFAULT_I_RELTOL).unwrap();
            assert_relative_eq!(v, expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn i_tends_to_one_over_alpha_as_singularity_vanishes() {
        let v = eval_i(2.0, 1e-6, 100.0, 1e-12).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-7);
    }

    #[test]
    fn i_rejects_non_integrable_exponent() {
        assert!(eval_i(1.0, 8.0, 4.0, 1e-10).is_err());
        assert!(eval_i(0.0, 3.0, 4.0, 1e-10).is_err());
    }

    #[test]
    fn j_values_and_continuity() {
        assert_relative_eq!(eval_j(1.0, 3.0, 2.0).unwrap(), 4.0, max_relative = 1e-15);
        assert_relative_eq!(eval_j(0.25, 4.0, 3.0).unwrap(), 1.889_881_574_842_309_7, max_relative = 1e-14);
        assert_relative_eq!(eval_j(2.5, 4.0, 3.0).unwrap(), 4.5, max_relative = 1e-15);
        let below = eval_j(1.0 - 1e-12, 4.0, 3.0).unwrap();
        let above = eval_j(1.0 + 1e-12, 4.0, 3.0).unwrap();
        assert!((below - above).abs() < 1e-10);
        assert!(eval_j(1.0, 6.0, 3.0).is_err());
    }

    #[test]
    fn c_pd_exponent_discrepancy_with_weak_threshold() {
        let c = eval_c_pd(2.0, 3).unwrap();
        assert_relative_eq!(c, 0.168_977_830_518_443_44, max_relative = 1e-13);
        let weak = eval_weak_threshold(&SpectralParams::new(3, 3.5, 1.0)).unwrap();
        assert_relative_eq!(weak, 0.343_797_384_475_074_8, max_relative = 1e-13);
        // the two differ exactly by the exponent mismatch −4/(2p+d−2) vs −4/(2p+d)
        for (p, d) in [(2.0, 3usize), (3.0, 3), (4.5, 4), (2.6, 5)] {
            let delta = p + 0.5 * d as f64;
            let weak = eval_weak_threshold(&SpectralParams::new(d, delta, 1.0)).unwrap();
            let base = 2.0 * (delta - 1.0).exp_m1();
            let predicted = base.powf(-4.0 / (2.0 * p + d as f64 - 2.0) + 4.0 / (2.0 * p + d as f64));
            let c = eval_c_pd(p, d).unwrap();
            assert_relative_eq!(c / weak, predicted, max_relative = 1e-12);
            assert!(c > 0.0 && c < weak);
        }
        assert!(eval_c_pd(1.5, 3).is_err());
    }

    #[test]
    fn voigt_constants() {
        let v = eval_voigt(0.0, 1.0).unwrap();
        assert_eq!((v.c, v.omega), (1.0, 0.0));
        let v = eval_voigt(0.5, 1.0).unwrap();
        assert_relative_eq!(v.c, 2.0, max_relative = 1e-15);
        assert_relative_eq!(v.omega, std::f64::consts::LN_2, max_relative = 1e-15);
        for (b, beta) in [(0.1, 0.3), (0.9, 2.0), (0.45, 1.0)] {
            let v = eval_voigt(b, beta).unwrap();
            assert_relative_eq!(v.c * (v.omega * beta).exp(), 1.0 / ((1.0 - b) * (1.0 - b)), max_relative = 1e-13);
        }
        assert!(eval_voigt(1.0, 1.0).is_err());
    }

    #[test]
    fn ultra_and_betti() {
        let params = p43();
        let c = eval_ultra_constant(0.0, 1.0, &params, 1.0, 1.0, AdmissibleClass::Weak).unwrap();
        assert_relative_eq!(c, 16.0 * (1.0 + 647.569_279_371_306_3), max_relative = 1e-13);
        assert_relative_eq!(c, 10_377.108_469_940_9, max_relative = 1e-13);
        let half = eval_ultra_constant(0.0, 1.0, &params, 1.0, 2.0, AdmissibleClass::Weak).unwrap();
        assert_relative_eq!(half, c / 2.0, max_relative = 1e-15);
        let p2 = SpectralParams::new(3, 4.0, 1.5);
        let v = eval_ultra_constant(0.3, 0.5, &p2, 1.0, 2.0, AdmissibleClass::Weak).unwrap();
        assert_relative_eq!(v, 2_064_395.775_421_992_7, max_relative = 1e-12);

        assert_relative_eq!(eval_betti_bound(0.0, 1.0, &params, 1.0).unwrap(), 31_131.325_409_822_7, max_relative = 1e-13);
        assert_relative_eq!(eval_betti_bound(0.5, 1.0, &params, 1.0).unwrap(), 127_513_908.878_633_79, max_relative = 1e-12);
        let p5 = SpectralParams::new(3, 5.0, 1.3);
        assert_relative_eq!(eval_betti_bound(0.2, 2.0, &p5, 0.7).unwrap(), 6_609_711.834_042_521, max_relative = 1e-12);
        // volume cancels
        let vol = 37.2;
        let u = eval_ultra_constant(0.2, 2.0, &p5, 0.7, vol, AdmissibleClass::Weak).unwrap();
        assert_relative_eq!(eval_betti_bound(0.2, 2.0, &p5, 0.7).unwrap(), vol * u * 3.0, max_relative = 1e-13);
        assert!(eval_betti_bound(1.0 - 1e-6, 1.0, &params, 1.0).unwrap() > 1e100);
    }

    #[test]
    fn lp_betti_variant() {
        let mut params = p43();
        params.p = 4.0;
        let (cbar, bound) = eval_cbar_and_betti_lp(0.0, &params, 1.0).unwrap();
        assert_relative_eq!(bound.unwrap(), eval_betti_bound(0.0, 1.0, &params, 1.0).unwrap(), max_relative = 1e-14);
        assert_eq!(eval_cbar_and_betti_lp(1.0 / cbar, &params, 1.0).unwrap().1, None);
        let (_, half) = eval_cbar_and_betti_lp(0.5 / cbar, &params, 1.0).unwrap();
        assert_relative_eq!(half.unwrap(), eval_betti_bound(0.5, 1.0, &params, 1.0).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn kato_rhs_values() {
        let mut params = p43();
        params.p = 4.0;
        let rhs = eval_kato_bound_rhs(1.0, 1.0, &params, 1.0, AdmissibleClass::Weak).unwrap();
        assert_relative_eq!(rhs, 9.394_173_957_788_683, max_relative = 1e-10);
        assert_eq!(eval_kato_bound_rhs(0.0, 1.0, &params, 1.0, AdmissibleClass::Weak).unwrap(), 0.0);
        let far = eval_kato_bound_rhs(1.0, 1e6, &params, 1.0, AdmissibleClass::Weak).unwrap();
        assert!(far < 1e-2);

        let params = SpectralParams { p: 2.0, ..SpectralParams::new(3, 3.5, 1.0) };
        let b1 = eval_bkato_bound_rhs(1.0, 1.0, &params, 1.0, AdmissibleClass::Weak).unwrap();
        let factor = heat_factor(&params, 1.0, AdmissibleClass::Weak).unwrap();
        assert_relative_eq!(b1, factor.sqrt() * eval_j(1.0, 3.5, 2.0).unwrap(), max_relative = 1e-14);
        assert!(eval_bkato_bound_rhs(1.0, 1e-60, &params, 1.0, AdmissibleClass::Weak).unwrap() < 1e-3);
    }

    #[test]
    fn vanishing_thresholds() {
        let params = SpectralParams { p: 2.0, ..SpectralParams::new(3, 3.5, 1.0) };
        let th = eval_er_threshold(1.0, &params, 1.0).unwrap();
        assert_relative_eq!(th.exact, 0.010_417_385_849_123_52, max_relative = 1e-10);
        assert_relative_eq!(th.simplified.unwrap(), 0.008_877_497_151_372_383, max_relative = 1e-12);
        assert_relative_eq!(
            th.simplified.unwrap(),
            (1.0 + 155.651_261_975_446_63f64).powf(-0.5) / 9.0,
            max_relative = 1e-12
        );
        assert_eq!(th.simplified_sound, Some(true));
        // δ = p + d/2 here, so the Kato part of auto_delta equals exact and c(p,d) is larger
        assert_relative_eq!(th.auto_delta, th.exact, max_relative = 1e-12);

        let small = eval_er_threshold(0.01, &params, 1.0).unwrap();
        assert_relative_eq!(small.exact, 7.467_324_598_689_885e-4, max_relative = 1e-9);
        assert_relative_eq!(small.simplified.unwrap(), 4.992_183_512_476_295e-3, max_relative = 1e-12);
        assert_eq!(small.simplified_sound, Some(false));
        assert!(eval_er_threshold(2.0, &params, 1.0).unwrap().simplified.is_none());
    }

    #[test]
    fn vanishing_threshold_inverts_kato_bound() {
        let params = SpectralParams { p: 3.0, ..SpectralParams::new(3, 4.2, 2.0) };
        let rho0 = 0.7;
        let th = eval_er_threshold(rho0, &params, 1.0).unwrap();
        let below = eval_kato_bound_rhs(th.exact * (1.0 - 1e-6), rho0, &params, 1.0, AdmissibleClass::Weak).unwrap();
        assert!(below < 1.0);
        let at = eval_kato_bound_rhs(th.exact, rho0, &params, 1.0, AdmissibleClass::Weak).unwrap();
        assert_relative_eq!(at, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn bundle_invariants() {
        for b in [0.0, 0.2, 1.0 / 3.0, 0.75, 0.9] {
            let params = SpectralParams { p: 3.0, ..SpectralParams::new(3, 4.0, 1.2) };
            let bundle = ConstantBundle::evaluate(&params, 1.0, b, 10.0).unwrap();
            let k0 = (1.0 + b) / (1.0 - b);
            assert!(bundle.k_conj as f64 >= k0 - 1e-12 && bundle.k_conj as f64 <= 2.0 / (1.0 - b) + 1e-12);
            for v in [bundle.b_structural, bundle.gamma, bundle.k_delta, bundle.k_lambda, bundle.i_val, bundle.j_val, bundle.c_voigt, bundle.omega_voigt, bundle.c_ultra, bundle.cbar] {
                assert!(v >= 0.0 && v.is_finite());
            }
            assert_eq!(bundle.kappa0.is_some(), b > 0.0);
        }
    }

    #[test]
    fn evaluators_are_bit_reproducible() {
        let params = SpectralParams { p: 3.0, ..SpectralParams::new(3, 4.4, 1.2) };
        let a = ConstantBundle::evaluate(&params, 1.1, 0.3, 5.0).unwrap();
        let b = ConstantBundle::evaluate(&params, 1.1, 0.3, 5.0).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}

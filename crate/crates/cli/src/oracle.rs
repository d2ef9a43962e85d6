//! Independent high-precision re-evaluation of the closed-form constants.
//!
//! Every formula is written out again in 192-bit binary floating point and
//! compared with the `f64` library value.

use std::collections::BTreeMap;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use katobound::constants::{
    eval_b, eval_betti_bound, eval_gamma, eval_j, eval_voigt, eval_weak_threshold, weak_level, SpectralParams,
};
use serde::Serialize;

use crate::error::CliError;

type F = FBig<HalfEven, 2>;

const PRECISION: usize = 192;

/// Agreement required between library and oracle.
pub const ORACLE_RELTOL: f64 = 1e-12;

fn hp(x: f64) -> F {
    F::try_from(x)
        .expect("finite input")
        .with_precision(PRECISION)
        .value()
}

fn to_f64(x: &F) -> f64 {
    x.to_f64().value()
}

fn pow(base: &F, exp: &F) -> F {
    base.powf(exp)
}

fn min(a: F, b: F) -> F {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn b_hp(delta: f64, d: usize) -> F {
    let (delta, d) = (hp(delta), hp(d as f64));
    let one = hp(1.0);
    let two = hp(2.0);
    let half = hp(0.5);
    let first = pow(&(&two * (&delta - &one) / &delta), &half);
    let second = pow(&(&d - &one), &(&one - &one / &delta));
    let third = pow(&((&delta - &two) / (&delta - &d)), &(&half - &one / &delta));
    first * second * third
}

pub fn gamma_hp(lambda: &F, delta: f64, diameter: f64, d: usize) -> F {
    let b = b_hp(delta, d);
    let one = hp(1.0);
    let first = pow(&hp(2.0), &(-(&one / (hp(delta) - &one))));
    let second = &one / (hp(4.0) * (lambda * &b * hp(diameter)).exp_m1());
    b * lambda * min(first, second)
}

pub fn weak_threshold_hp(delta: f64, diameter: f64, d: usize) -> F {
    let b = b_hp(delta, d);
    let one = hp(1.0);
    let dm1 = hp(delta) - &one;
    let ratio = &dm1 / (b * hp(diameter));
    let base = hp(2.0) * dm1.exp_m1();
    (hp(d as f64) - &one) * pow(&base, &(hp(-2.0) / hp(delta))) * &ratio * &ratio
}

pub fn j_hp(beta: f64, delta: f64, p: f64) -> F {
    let (beta, delta, p) = (hp(beta), hp(delta), hp(p));
    let one = hp(1.0);
    let two_p = hp(2.0) * &p;
    let scale = &two_p / (&two_p - &delta);
    if beta <= one {
        let exponent = (&two_p - &delta) / &two_p;
        scale * pow(&beta, &exponent)
    } else {
        scale + beta - one
    }
}

/// `(C, ω) = (1/(1−b), −log(1−b)/β)`.
pub fn voigt_hp(b: f64, beta: f64) -> (F, F) {
    let one = hp(1.0);
    let gap = &one - hp(b);
    let c = &one / &gap;
    let omega = -(gap.ln()) / hp(beta);
    (c, omega)
}

/// `d·(2/(1−b))^{(1+1/β)(1+b)/(1−b)+δ/2}·(1 + K(δ)D^{δ/2})`.
pub fn betti_bound_hp(b: f64, beta: f64, delta: f64, diameter: f64, d: usize, kprime: f64) -> F {
    let one = hp(1.0);
    let half_delta = hp(delta) / hp(2.0);
    let dm1 = hp(delta) - &one;
    let k = hp(kprime) * pow(&(hp(4.0) * dm1.exp_m1() / &dm1), &half_delta);
    let factor = &one + k * pow(&hp(diameter), &half_delta);
    let b = hp(b);
    let exponent = (&one + &one / hp(beta)) * (&one + &b) / (&one - &b) + &half_delta;
    hp(d as f64) * pow(&(hp(2.0) / (&one - &b)), &exponent) * factor
}

/// `γ` at the level `(δ−1)/(B·D)` in closed form: `(δ−1)/(4D(e^{δ−1}−1))`.
pub fn gamma_identity_hp(delta: f64, diameter: f64) -> F {
    let dm1 = hp(delta) - hp(1.0);
    &dm1 / (hp(4.0) * hp(diameter) * dm1.exp_m1())
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRecord {
    pub quantity: String,
    pub inputs: BTreeMap<String, f64>,
    pub oracle: f64,
    pub library: f64,
    pub rel_err: f64,
}

impl OracleRecord {
    fn new(quantity: &str, inputs: &[(&str, f64)], oracle: &F, library: f64) -> Self {
        let oracle = to_f64(oracle);
        OracleRecord {
            quantity: quantity.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            oracle,
            library,
            rel_err: ((library - oracle) / oracle).abs(),
        }
    }

    pub fn passed(&self) -> bool {
        self.rel_err < ORACLE_RELTOL
    }
}

const DELTAS: [f64; 4] = [3.5, 4.0, 5.0, 6.5];
const DIMS: [usize; 3] = [3, 4, 5];
const DIAMETERS: [f64; 3] = [0.5, 1.0, 5.441398092702653];
const LAMBDAS: [f64; 3] = [0.05, 0.3, 1.0];
const BETAS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
const KATO_B: [f64; 4] = [0.0, 0.1, 0.5, 0.9];

fn params(d: usize, delta: f64, diameter: f64) -> SpectralParams {
    SpectralParams::new(d, delta, diameter)
}

/// The full oracle suite over a fixed parameter grid.
pub fn run_suite(kprime: f64) -> Result<Vec<OracleRecord>, CliError> {
    let mut out = Vec::new();
    for &delta in &DELTAS {
        for &d in DIMS.iter().filter(|&&d| (d as f64) < delta) {
            let base = params(d, delta, 1.0);
            out.push(OracleRecord::new(
                "B",
                &[("delta", delta), ("d", d as f64)],
                &b_hp(delta, d),
                eval_b(&base)?,
            ));
            for &diameter in &DIAMETERS {
                let prm = params(d, delta, diameter);
                out.push(OracleRecord::new(
                    "weak_threshold",
                    &[("delta", delta), ("d", d as f64), ("diameter", diameter)],
                    &weak_threshold_hp(delta, diameter, d),
                    eval_weak_threshold(&prm)?,
                ));
                for &lambda in &LAMBDAS {
                    let prm = SpectralParams { lambda, ..prm };
                    out.push(OracleRecord::new(
                        "gamma",
                        &[("delta", delta), ("d", d as f64), ("diameter", diameter), ("lambda", lambda)],
                        &gamma_hp(&hp(lambda), delta, diameter, d),
                        eval_gamma(&prm)?,
                    ));
                }
                let level = weak_level(&prm)?;
                let at_level = eval_gamma(&SpectralParams { lambda: level, ..prm })?;
                let inputs = [("delta", delta), ("d", d as f64), ("diameter", diameter)];
                out.push(OracleRecord::new(
                    "gamma_identity",
                    &inputs,
                    &gamma_identity_hp(delta, diameter),
                    at_level,
                ));
                let lambda_hp = (hp(delta) - hp(1.0)) / (b_hp(delta, d) * hp(diameter));
                out.push(OracleRecord::new(
                    "gamma_identity_oracle",
                    &inputs,
                    &gamma_identity_hp(delta, diameter),
                    to_f64(&gamma_hp(&lambda_hp, delta, diameter, d)),
                ));
                for &beta in &BETAS {
                    for &b in &KATO_B {
                        out.push(OracleRecord::new(
                            "betti_bound",
                            &[
                                ("delta", delta),
                                ("d", d as f64),
                                ("diameter", diameter),
                                ("beta", beta),
                                ("b", b),
                                ("kprime", kprime),
                            ],
                            &betti_bound_hp(b, beta, delta, diameter, d, kprime),
                            eval_betti_bound(b, beta, &SpectralParams { beta, ..prm }, kprime)?,
                        ));
                    }
                }
            }
        }
        for p in [0.6 * delta, delta, 2.0 * delta] {
            for &beta in BETAS.iter().chain(&[5.0]) {
                out.push(OracleRecord::new(
                    "J",
                    &[("beta", beta), ("delta", delta), ("p", p)],
                    &j_hp(beta, delta, p),
                    eval_j(beta, delta, p)?,
                ));
            }
        }
    }
    for &beta in &BETAS {
        for &b in KATO_B.iter().filter(|&&b| b > 0.0) {
            let (c, omega) = voigt_hp(b, beta);
            let lib = eval_voigt(b, beta)?;
            out.push(OracleRecord::new("voigt_c", &[("b", b), ("beta", beta)], &c, lib.c));
            out.push(OracleRecord::new("voigt_omega", &[("b", b), ("beta", beta)], &omega, lib.omega));
        }
    }
    Ok(out)
}

//! The `constants` subcommand: every closed-form constant at one parameter
//! tuple.

use std::collections::BTreeMap;

use katobound::constants::{
    eval_b, eval_betti_bound, eval_c_pd, eval_cbar_and_betti_lp, eval_er_threshold, eval_gallot_rhs, eval_gamma,
    eval_i, eval_j, eval_k, eval_k_lambda, eval_ultra_constant, eval_voigt, eval_weak_threshold, heat_factor,
    i_bounds, weak_level, AdmissibleClass, SpectralParams, DEFAULT_I_RELTOL,
};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{format_float, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantInputs {
    pub delta: f64,
    pub d: usize,
    pub diameter: f64,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub b: f64,
    pub vol: f64,
    pub kprime: f64,
    pub rho0: f64,
    /// `⫶ρ₋⫶_p` for the `L^p` Betti bound.
    pub rho_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantRow {
    pub name: &'static str,
    pub value: Option<f64>,
    pub meaning: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantTable {
    pub inputs: ConstantInputs,
    pub constants: BTreeMap<&'static str, Option<f64>>,
    #[serde(skip)]
    pub rows: Vec<ConstantRow>,
}

impl ConstantInputs {
    pub fn params(&self) -> SpectralParams {
        SpectralParams {
            d: self.d,
            delta: self.delta,
            p: self.p,
            diameter: self.diameter,
            lambda: self.lambda,
            alpha: self.alpha,
            beta: self.beta,
            rho0: self.rho0,
        }
    }
}

pub fn evaluate(inputs: ConstantInputs) -> Result<ConstantTable, CliError> {
    let prm = inputs.params();
    prm.validate()?;
    let voigt = eval_voigt(inputs.b, inputs.beta)?;
    let (i_lo, i_hi) = i_bounds(inputs.alpha, inputs.delta, inputs.p)?;
    let th = eval_er_threshold(inputs.rho0, &prm, inputs.kprime)?;
    let (cbar, betti_lp) = eval_cbar_and_betti_lp(inputs.rho_mean, &prm, inputs.kprime)?;
    let weak = AdmissibleClass::Weak;
    let level = AdmissibleClass::Level;
    let rows = vec![
        ConstantRow {
            name: "B",
            value: Some(eval_b(&prm)?),
            meaning: "structural constant B(delta, d)",
        },
        ConstantRow {
            name: "gamma",
            value: Some(eval_gamma(&prm)?),
            meaning: "gamma(lambda, delta, D, d)",
        },
        ConstantRow {
            name: "gallot_rhs",
            value: Some(eval_gallot_rhs(&prm)?),
            meaning: "curvature condition threshold at lambda",
        },
        ConstantRow {
            name: "weak_level",
            value: Some(weak_level(&prm)?),
            meaning: "lambda = (delta-1)/(B D)",
        },
        ConstantRow {
            name: "weak_threshold",
            value: Some(eval_weak_threshold(&prm)?),
            meaning: "admissibility threshold on mean_{delta/2}(rho_-)",
        },
        ConstantRow {
            name: "K_delta",
            value: Some(eval_k(&prm, inputs.kprime)?),
            meaning: "K(delta)",
        },
        ConstantRow {
            name: "K_lambda",
            value: Some(eval_k_lambda(&prm, inputs.kprime)?),
            meaning: "K(lambda, delta, D, d)",
        },
        ConstantRow {
            name: "heat_factor_weak",
            value: Some(heat_factor(&prm, inputs.kprime, weak)?),
            meaning: "1 + K(delta) D^{delta/2}",
        },
        ConstantRow {
            name: "heat_factor_level",
            value: Some(heat_factor(&prm, inputs.kprime, level)?),
            meaning: "1 + K(lambda, delta, D, d)",
        },
        ConstantRow {
            name: "I",
            value: Some(eval_i(inputs.alpha, inputs.delta, inputs.p, DEFAULT_I_RELTOL)?),
            meaning: "I(alpha, delta, p)",
        },
        ConstantRow {
            name: "I_lower",
            value: Some(i_lo),
            meaning: "1/alpha",
        },
        ConstantRow {
            name: "I_upper",
            value: Some(i_hi),
            meaning: "alpha^{s-1}(2p/(2p-delta) + alpha^{-s} e^{-alpha})",
        },
        ConstantRow {
            name: "J",
            value: Some(eval_j(inputs.beta, inputs.delta, inputs.p)?),
            meaning: "J(beta, delta, p)",
        },
        ConstantRow {
            name: "c_pd",
            value: eval_c_pd(inputs.p, inputs.d).ok(),
            meaning: "c(p, d), needs p > d/2",
        },
        ConstantRow {
            name: "C_voigt",
            value: Some(voigt.c),
            meaning: "1/(1-b)",
        },
        ConstantRow {
            name: "omega_voigt",
            value: Some(voigt.omega),
            meaning: "log(1/(1-b))/beta",
        },
        ConstantRow {
            name: "c_ultra_weak",
            value: Some(eval_ultra_constant(inputs.b, inputs.beta, &prm, inputs.kprime, inputs.vol, weak)?),
            meaning: "L^1 -> L^inf constant, weak class",
        },
        ConstantRow {
            name: "c_ultra_level",
            value: Some(eval_ultra_constant(inputs.b, inputs.beta, &prm, inputs.kprime, inputs.vol, level)?),
            meaning: "L^1 -> L^inf constant, level class",
        },
        ConstantRow {
            name: "betti_bound",
            value: Some(eval_betti_bound(inputs.b, inputs.beta, &prm, inputs.kprime)?),
            meaning: "b1 bound from b_kato(rho_-, beta) = b",
        },
        ConstantRow {
            name: "cbar",
            value: Some(cbar),
            meaning: "2p/(2p-delta) (1 + K(delta) D^{delta/2})^{1/p}",
        },
        ConstantRow {
            name: "betti_bound_lp",
            value: betti_lp,
            meaning: "b1 bound from mean_p(rho_-), needs cbar mean < 1",
        },
        ConstantRow {
            name: "vanishing_threshold",
            value: Some(th.exact),
            meaning: "smallness threshold on mean_p((rho-rho0)_-)",
        },
        ConstantRow {
            name: "vanishing_threshold_auto_delta",
            value: Some(th.auto_delta),
            meaning: "same with delta' = p + d/2",
        },
        ConstantRow {
            name: "vanishing_threshold_simplified",
            value: th.simplified,
            meaning: "closed form for rho0 <= 1",
        },
    ];
    Ok(ConstantTable {
        inputs,
        constants: rows.iter().map(|r| (r.name, r.value)).collect(),
        rows,
    })
}

fn short(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{x:.6}")
    } else {
        format!("{x:.6e}")
    }
}

impl ConstantTable {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["constant", "value", "full", "meaning"]);
        for r in &self.rows {
            let (v, full) = match r.value {
                Some(x) => (short(x), format_float(x)),
                None => ("n/a".to_string(), "n/a".to_string()),
            };
            t.push(vec![r.name.to_string(), v, full, r.meaning.to_string()]);
        }
        t
    }
}

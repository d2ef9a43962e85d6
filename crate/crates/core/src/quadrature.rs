//! One-dimensional quadrature: globally adaptive Gauss–Kronrod (7/15) and
//! fixed composite Gauss–Legendre rules.

use crate::error::{Error, Result};

// Abscissae and weights of the 15-point Kronrod rule and its embedded
// 7-point Gauss rule (QUADPACK tables).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Stops once the summed error estimate is below `max(abstol, reltol·|I|)`.
/// Fails if `max_intervals` subintervals are not enough.
pub fn adaptive_gk<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    reltol: f64,
    abstol: f64,
    max_intervals: usize,
) -> Result<QuadResult> {
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let value: f64 = intervals.iter().map(|iv| iv.2).sum();
        let error: f64 = intervals.iter().map(|iv| iv.3).sum();
        let target = abstol.max(reltol * value.abs());
        if error <= target {
            return Ok(QuadResult {
                value,
                error,
                intervals: intervals.len(),
            });
        }
        if intervals.len() >= max_intervals {
            return Err(Error::Quadrature {
                target,
                estimate: error,
            });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("nonempty");
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n(x) and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm1) / (x * x - 1.0);
            let step = pn / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
            x = 0.0;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule with `order` nodes per panel over the given
/// breakpoints. Returns absolute `(t, weight)` pairs in increasing `t`.
pub fn composite_rule(breakpoints: &[f64], order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let mut rule = Vec::with_capacity(order * breakpoints.len().saturating_sub(1));
    for pair in breakpoints.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            rule.push((mid + half * xi, half * wi));
        }
    }
    rule
}

/// Breakpoints for `[0, end]` graded geometrically toward 0: `end·2^{-j}`.
pub fn graded_breakpoints(end: f64, levels: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=levels).map(|j| end * 0.5f64.powi(j as i32)).collect();
    pts.push(0.0);
    pts.reverse();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
            assert!((approx - exact).abs() < 1e-12, "n={n}");
            let even = 2 * n - 2;
            let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(even as i32)).sum();
            assert!((approx - 2.0 / (even as f64 + 1.0)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn adaptive_handles_smooth_and_peaked_integrands() {
        let r = adaptive_gk(|t: f64| t.exp(), 0.0, 1.0, 1e-13, 0.0, 100).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-13);
        let r = adaptive_gk(|t: f64| 1.0 / (1e-4 + t * t), -1.0, 1.0, 1e-11, 0.0, 500).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn adaptive_reports_budget_exhaustion() {
        let err = adaptive_gk(|t: f64| (1.0 / t).sin(), 1e-9, 1.0, 1e-15, 0.0, 4);
        assert!(matches!(err, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn graded_composite_rule_covers_interval() {
        let bp = graded_breakpoints(2.0, 6);
        assert_eq!(bp.first(), Some(&0.0));
        assert_eq!(bp.last(), Some(&2.0));
        let rule = composite_rule(&bp, 8);
        let total: f64 = rule.iter().map(|r| r.1).sum();
        assert!((total - 2.0).abs() < 1e-14);
        let approx: f64 = rule.iter().map(|(t, w)| w * (-3.0 * t).exp()).sum();
        assert!((approx - (1.0 - (-6.0f64).exp()) / 3.0).abs() < 1e-14);
    }
}

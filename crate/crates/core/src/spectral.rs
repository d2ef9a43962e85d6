//! Discrete Laplace–Beltrami operator and its spectral calculus: heat
//! semigroup, heat kernel, resolvent and traces.
//!
//! Sign convention: `Δf = −(1/√g)∂ᵢ(√g gⁱʲ∂ⱼf)`, so `Δ ≥ 0`.

use crate::eigen::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::geometry::{GridSpec, MetricField, VolumeForm};
use crate::operator::{DiscreteOperator, StiffnessBuilder};

/// Ratio of the mesh floor `e^{−λ_max t}/Vol` to the smallest kernel
/// diagonal above which a time is not trusted.
pub const TRUNCATION_RATIO: f64 = 1e-6;

fn diagonal_checked(metric: &MetricField, x: &[f64]) -> Result<Vec<f64>> {
    let diag = metric.diagonal(x);
    if diag.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NotPositiveDefinite { point: x.to_vec() });
    }
    Ok(diag)
}

/// Flux-form Laplacian `L = M⁻¹S`.
///
/// `S` couples axis neighbours `x, x+hᵢeᵢ` with
/// `√det g·gⁱⁱ` evaluated at the edge midpoint, times `∏hⱼ/hᵢ²`; `M` holds
/// the lumped weights `√det g(x)·∏hⱼ`. Constants are in the kernel exactly.
pub fn assemble_laplacian(metric: &MetricField, grid: &GridSpec) -> Result<DiscreteOperator> {
    let n = grid.len();
    let d = grid.dim();
    let cell = grid.cell_volume();
    let mut mass = Vec::with_capacity(n);
    let mut builder = StiffnessBuilder::new(n);
    for node in 0..n {
        let x = grid.coords(node);
        let diag = diagonal_checked(metric, &x)?;
        mass.push(diag.iter().product::<f64>().sqrt() * cell);
        for axis in 0..d {
            let h = grid.spacing(axis);
            let mut mid = x.clone();
            mid[axis] += 0.5 * h;
            let gm = diagonal_checked(metric, &mid)?;
            let coef = gm.iter().product::<f64>().sqrt() / gm[axis] * cell / (h * h);
            builder.add_edge(node, grid.neighbor(node, axis, 1), coef);
        }
    }
    DiscreteOperator::new(builder.finish(), mass)
}

/// `e^{−tL}f`.
pub fn heat_apply(dec: &SpectralDecomposition, t: f64, f: &[f64]) -> Result<Vec<f64>> {
    dec.apply_function(|l| (-l * t).exp(), f)
}

/// `(L + α)⁻¹f`.
pub fn resolvent_apply(dec: &SpectralDecomposition, alpha: f64, f: &[f64]) -> Result<Vec<f64>> {
    if let Some(&l0) = dec.eigenvalues().first() {
        if !(l0 + alpha > 0.0) {
            return Err(crate::error::domain(
                "resolvent",
                "alpha > -min spectrum",
                format!("alpha = {alpha}, min eigenvalue = {l0}"),
            ));
        }
    }
    dec.apply_function(|l| 1.0 / (l + alpha), f)
}

/// `k(t, x, x)` at every node.
pub fn heat_diagonal(dec: &SpectralDecomposition, t: f64) -> Result<Vec<f64>> {
    dec.kernel_diagonal(|l| (-l * t).exp())
}

/// `sup_{x,y} k(t, x, y)`.
///
/// The heat kernel is a positive semidefinite kernel, so
/// `|k(x,y)| ≤ √(k(x,x)k(y,y))` and the supremum sits on the diagonal.
pub fn heat_kernel_sup(dec: &SpectralDecomposition, t: f64) -> Result<f64> {
    Ok(heat_diagonal(dec, t)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// `max_{x,y} |k(t, x, y)|` over every pair, from the full kernel matrix.
pub fn heat_kernel_sup_pairs(dec: &SpectralDecomposition, t: f64) -> Result<f64> {
    let k = dec.kernel_matrix(|l| (-l * t).exp())?;
    let mut best = 0.0f64;
    for j in 0..k.ncols() {
        for i in 0..k.nrows() {
            best = best.max(k[(i, j)].abs());
        }
    }
    Ok(best)
}

/// `Σₖ e^{−λₖt}`.
pub fn trace_heat(dec: &SpectralDecomposition, t: f64) -> f64 {
    dec.trace_function(|l| (-l * t).exp())
}

/// `Σ_x w_x k(t, x, x)`, the second route to the trace.
pub fn trace_heat_diagonal(dec: &SpectralDecomposition, t: f64) -> Result<f64> {
    let diag = heat_diagonal(dec, t)?;
    Ok(dec.mass().iter().zip(&diag).map(|(w, k)| w * k).sum())
}

/// Mesh floor `e^{−λ_max t}/Vol` at time `t`.
pub fn truncation_floor(dec: &SpectralDecomposition, t: f64, volume: f64) -> f64 {
    (-dec.max_eigenvalue() * t).exp() / volume
}

/// Whether `t` is resolved by the mesh: floor ≤ `TRUNCATION_RATIO·min_x k(t,x,x)`.
pub fn is_trusted_time(dec: &SpectralDecomposition, t: f64, volume: f64) -> Result<bool> {
    let kmin = if dec.has_vectors() {
        heat_diagonal(dec, t)?.into_iter().fold(f64::INFINITY, f64::min)
    } else {
        trace_heat(dec, t) / volume
    };
    Ok(truncation_floor(dec, t, volume) <= TRUNCATION_RATIO * kmin)
}

/// Smallest trusted time, by bisection on `[1e-8, 1e3]` (relative width 1e-6).
pub fn t_min(dec: &SpectralDecomposition, volume: f64) -> Result<f64> {
    if !dec.is_complete() {
        return Err(Error::Shape {
            expected: dec.len(),
            got: dec.eigenvalues().len(),
        });
    }
    let (mut lo, mut hi) = (1e-8f64, 1e3f64);
    if is_trusted_time(dec, lo, volume)? {
        return Ok(lo);
    }
    while hi / lo > 1.0 + 1e-6 {
        let mid = (lo * hi).sqrt();
        if is_trusted_time(dec, mid, volume)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Volume form given by an operator's mass weights.
pub fn operator_volume(op: &DiscreteOperator) -> VolumeForm {
    VolumeForm::from_weights(op.mass().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{eigendecompose, EigenOptions};
    use crate::geometry::{MetricFamily, Profile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn flat(n: usize) -> (GridSpec, DiscreteOperator) {
        let grid = GridSpec::cubic(3, n, 2.0 * PI).unwrap();
        let op = assemble_laplacian(&MetricField::flat(&grid), &grid).unwrap();
        (grid, op)
    }

    fn conformal(n: usize, amplitude: f64) -> (GridSpec, DiscreteOperator) {
        let grid = GridSpec::cubic(3, n, 2.0 * PI).unwrap();
        let fam = MetricFamily::Conformal {
            profile: Profile::bump(amplitude, 0.8, vec![PI; 3]),
        };
        let op = assemble_laplacian(&MetricField::new(fam, &grid).unwrap(), &grid).unwrap();
        (grid, op)
    }

    fn symbols(n: usize, period: f64) -> Vec<f64> {
        let h = period / n as f64;
        let s: Vec<f64> = (0..n)
            .map(|k| (2.0 - 2.0 * (2.0 * PI * k as f64 / n as f64).cos()) / (h * h))
            .collect();
        let mut out = Vec::with_capacity(n * n * n);
        for a in &s {
            for b in &s {
                for c in &s {
                    out.push(a + b + c);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// Discrete lattice theta function: `k(t,x,x)` of the flat grid Laplacian.
    fn lattice_theta(n: usize, period: f64, t: f64) -> f64 {
        let h = period / n as f64;
        let one: f64 = (0..n)
            .map(|k| (-(2.0 - 2.0 * (2.0 * PI * k as f64 / n as f64).cos()) / (h * h) * t).exp())
            .sum::<f64>()
            / period;
        one.powi(3)
    }

    fn random_field(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
    }

    #[test]
    fn flat_spectrum_matches_fourier_symbols() {
        let (_, op) = flat(8);
        let dec = eigendecompose(&op, EigenOptions::values_only()).unwrap();
        for (a, b) in dec.eigenvalues().iter().zip(symbols(8, 2.0 * PI)) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let first = dec.eigenvalues()[1];
        let mult = dec.eigenvalues().iter().filter(|&&v| (v - first).abs() < 1e-9).count();
        assert_eq!(mult, 6);
    }

    #[test]
    fn constants_are_harmonic_and_operator_is_symmetric() {
        let (grid, op) = conformal(8, -0.4);
        let ones = vec![1.0; grid.len()];
        assert!(op.apply(&ones).unwrap().iter().all(|v| v.abs() < 1e-12));
        for seed in 0..5 {
            let f = random_field(grid.len(), seed);
            let h = random_field(grid.len(), seed + 100);
            let a = op.inner(&op.apply(&f).unwrap(), &h).unwrap();
            let b = op.inner(&f, &op.apply(&h).unwrap()).unwrap();
            let scale = op.norm(&f).unwrap() * op.norm(&h).unwrap();
            assert!((a - b).abs() <= 1e-10 * scale);
        }
        let dec = eigendecompose(&op, EigenOptions::full()).unwrap();
        assert!(dec.min_eigenvalue().abs() < 1e-9);
        assert!(dec.eigenvalues().iter().all(|&v| v > -1e-9));
        let (res, orth) = dec.residuals(&op).unwrap();
        assert!(res < 1e-8 && orth < 1e-9);
        let pairs = dec.eigenpairs().unwrap();
        let phi0 = &pairs[0].1;
        assert!(phi0.iter().all(|v| (v.abs() - phi0[0].abs()).abs() < 1e-9));
    }

    #[test]
    fn potential_shifts_spectrum() {
        let (grid, op) = conformal(8, 0.3);
        let base = eigendecompose(&op, EigenOptions::values_only()).unwrap();
        let shifted = eigendecompose(&op.shifted(1.75).unwrap(), EigenOptions::values_only()).unwrap();
        for (a, b) in base.eigenvalues().iter().zip(shifted.eigenvalues()) {
            assert!((a + 1.75 - b).abs() < 1e-9);
        }
        let zero = op.with_potential(&vec![0.0; grid.len()]).unwrap();
        let same = eigendecompose(&zero, EigenOptions::values_only()).unwrap();
        assert_eq!(same.eigenvalues(), base.eigenvalues());
    }

    #[test]
    fn heat_semigroup_identities() {
        let (grid, op) = conformal(8, -0.3);
        let dec = eigendecompose(&op, EigenOptions::full()).unwrap();
        let f = random_field(grid.len(), 7);
        let at0 = heat_apply(&dec, 0.0, &f).unwrap();
        assert!(at0.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-9));
        let ts = heat_apply(&dec, 0.7, &f).unwrap();
        let two = heat_apply(&dec, 0.3, &heat_apply(&dec, 0.4, &f).unwrap()).unwrap();
        assert!(ts.iter().zip(&two).all(|(a, b)| (a - b).abs() < 1e-9));
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for t in [0.01, 0.1, 1.0] {
            assert!(sup(&heat_apply(&dec, t, &f).unwrap()) <= sup(&f) * (1.0 + 1e-12));
        }
        let pos: Vec<f64> = f.iter().map(|v| v.abs()).collect();
        for t in [0.01, 0.1, 1.0] {
            assert!(heat_apply(&dec, t, &pos).unwrap().iter().all(|&v| v >= -1e-9 * sup(&pos)));
        }
        let pairs = dec.eigenpairs().unwrap();
        let (l5, phi5) = &pairs[5];
        let out = heat_apply(&dec, 0.2, phi5).unwrap();
        assert!(out.iter().zip(phi5).all(|(a, b)| (a - (-l5 * 0.2).exp() * b).abs() < 1e-9));
    }

    #[test]
    fn point_mass_is_conserved() {
        let (grid, op) = flat(8);
        let dec = eigendecompose(&op, EigenOptions::full()).unwrap();
        let mut delta = vec![0.0; grid.len()];
        delta[37] = 1.0 / op.mass()[37];
        for t in [0.05, 0.5, 2.0] {
            let u = heat_apply(&dec, t, &delta).unwrap();
            let mass: f64 = u.iter().zip(op.mass()).map(|(a, w)| a * w).sum();
            assert!((mass - 1.0).abs() < 1e-10);
        }
        let k = dec.kernel_matrix(|l| (-0.3 * l).exp()).unwrap();
        for x in [0, 100, 511] {
            let row: f64 = (0..grid.len()).map(|y| op.mass()[y] * k[(x, y)]).sum();
            assert!((row - 1.0).abs() < 1e-8);
            assert!((k[(x, 7)] - k[(7, x)]).abs() < 1e-14);
        }
    }

    #[test]
    fn heat_kernel_sup_matches_lattice_theta_and_limits() {
        let (_, op) = flat(8);
        let dec = eigendecompose(&op, EigenOptions::full()).unwrap();
        let vol = (2.0 * PI).powi(3);
        let mut prev = f64::INFINITY;
        for t in [0.05, 0.1, 0.25, 0.5, 1.0] {
            let sup = heat_kernel_sup(&dec, t).unwrap();
            let oracle = lattice_theta(8, 2.0 * PI, t);
            assert!((sup - oracle).abs() / oracle < 1e-10);
            assert!((heat_kernel_sup_pairs(&dec, t).unwrap() - sup).abs() < 1e-12 * sup);
            assert!(sup <= prev);
            prev = sup;
            let tr = trace_heat(&dec, t);
            assert!((tr - trace_heat_diagonal(&dec, t).unwrap()).abs() < 1e-8 * tr);
            assert!(tr <= vol * sup * (1.0 + 1e-12));
            assert!((tr - vol * oracle).abs() < 1e-9 * tr);
        }
        assert!((heat_kernel_sup(&dec, 60.0).unwrap() - 1.0 / vol).abs() < 1e-12);
        assert!((trace_heat(&dec, 60.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resolvent_identities() {
        let (grid, op) = conformal(8, 0.25);
        let dec = eigendecompose(&op, EigenOptions::full()).unwrap();
        let c = vec![3.0; grid.len()];
        assert!(resolvent_apply(&dec, 2.0, &c).unwrap().iter().all(|v| (v - 1.5).abs() < 1e-10));
        let f = random_field(grid.len(), 3);
        let (a, b) = (0.7, 2.5);
        let ra = resolvent_apply(&dec, a, &f).unwrap();
        let rb = resolvent_apply(&dec, b, &f).unwrap();
        let rarb = resolvent_apply(&dec, a, &rb).unwrap();
        for i in 0..grid.len() {
            assert!(((a - b) * rarb[i] - (rb[i] - ra[i])).abs() < 1e-8);
        }
        let big = resolvent_apply(&dec, 1e9, &f).unwrap();
        assert!(big.iter().zip(&f).all(|(r, v)| (1e9 * r - v).abs() < 1e-5));
        assert!(resolvent_apply(&dec, -1.0, &f).is_err());
    }

    #[test]
    fn resolvent_is_laplace_transform_of_heat() {
        let (grid, op) = conformal(8, -0.2);
        let dec = eigendecompose(&op, EigenOptions::full()).unwrap();
        let f = random_field(grid.len(), 11);
        let alpha = 1.5;
        let end = 40.0 / alpha;
        let rule = crate::quadrature::composite_rule(&crate::quadrature::graded_breakpoints(end, 30), 20);
        let mut acc = vec![0.0; grid.len()];
        for (t, w) in rule {
            let u = heat_apply(&dec, t, &f).unwrap();
            let e = w * (-alpha * t).exp();
            acc.iter_mut().zip(&u).for_each(|(a, v)| *a += e * v);
        }
        let r = resolvent_apply(&dec, alpha, &f).unwrap();
        assert!(acc.iter().zip(&r).all(|(a, b)| (a - b).abs() < 1e-6));
    }

    #[test]
    fn trusted_time_window() {
        let (_, op) = flat(8);
        let dec = eigendecompose(&op, EigenOptions::full()).unwrap();
        let vol = (2.0 * PI).powi(3);
        let tm = t_min(&dec, vol).unwrap();
        assert!(is_trusted_time(&dec, tm * 1.01, vol).unwrap());
        assert!(!is_trusted_time(&dec, tm * 0.99, vol).unwrap());
        assert!(tm > 0.0 && tm < 10.0);
    }
}

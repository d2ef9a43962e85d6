//! Eigendecompositions of weighted-symmetric operators and the spectral
//! calculus built on them.
//!
//! Small operators (`N ≤ DENSE_LIMIT`) are diagonalized densely, one
//! connected component of the sparsity graph at a time. Larger ones use
//! shift-invert subspace iteration for the lowest eigenpairs.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operator::DiscreteOperator;

/// Largest size diagonalized densely by [`Solver::Auto`].
pub const DENSE_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spectrum {
    All,
    Lowest(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub spectrum: Spectrum,
    pub vectors: bool,
    pub solver: Solver,
}

impl EigenOptions {
    pub fn full() -> Self {
        EigenOptions {
            spectrum: Spectrum::All,
            vectors: true,
            solver: Solver::Auto,
        }
    }

    pub fn values_only() -> Self {
        EigenOptions {
            vectors: false,
            ..EigenOptions::full()
        }
    }

    pub fn lowest(k: usize, vectors: bool) -> Self {
        EigenOptions {
            spectrum: Spectrum::Lowest(k),
            vectors,
            solver: Solver::Auto,
        }
    }
}

/// Eigenpairs on one invariant set of unknowns.
#[derive(Debug, Clone)]
struct EigenBlock {
    nodes: Vec<usize>,
    values: Vec<f64>,
    /// Columns are `ψ = M^{1/2}φ` restricted to `nodes`.
    vectors: Option<Mat<f64>>,
}

/// Eigenvalues (nondecreasing) and optionally `M`-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    values: Vec<f64>,
    mass: Vec<f64>,
    blocks: Vec<EigenBlock>,
    complete: bool,
}

pub fn eigendecompose(op: &DiscreteOperator, opts: EigenOptions) -> Result<SpectralDecomposition> {
    let n = op.len();
    let iterative = match opts.solver {
        Solver::Dense => false,
        Solver::Iterative => true,
        Solver::Auto => n > DENSE_LIMIT,
    };
    if iterative {
        let k = match opts.spectrum {
            Spectrum::Lowest(k) => k.min(n),
            Spectrum::All => {
                return Err(Error::NoConvergence {
                    iterations: 0,
                    residual: f64::INFINITY,
                })
            }
        };
        return subspace_lowest(op, k, opts.vectors);
    }
    dense(op, opts)
}

fn dense(op: &DiscreteOperator, opts: EigenOptions) -> Result<SpectralDecomposition> {
    let n = op.len();
    let comps = op.components();
    let mut local = vec![0usize; n];
    let mut owner = vec![0usize; n];
    for (b, c) in comps.iter().enumerate() {
        for (k, &i) in c.iter().enumerate() {
            local[i] = k;
            owner[i] = b;
        }
    }
    let mut mats: Vec<Mat<f64>> = comps.iter().map(|c| Mat::zeros(c.len(), c.len())).collect();
    for (i, j, v) in op.symmetric_entries() {
        let b = owner[i];
        mats[b][(local[i], local[j])] += v;
    }
    let mut blocks = Vec::with_capacity(comps.len());
    for (nodes, a) in comps.into_iter().zip(mats) {
        let size = nodes.len();
        let block = if opts.vectors {
            let evd = a
                .self_adjoint_eigen(Side::Lower)
                .map_err(|_| Error::Eigensolver { size })?;
            let s = evd.S().column_vector();
            EigenBlock {
                nodes,
                values: (0..size).map(|i| s[i]).collect(),
                vectors: Some(evd.U().to_owned()),
            }
        } else {
            let values = a
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|_| Error::Eigensolver { size })?;
            EigenBlock {
                nodes,
                values,
                vectors: None,
            }
        };
        blocks.push(block);
    }
    let mut dec = SpectralDecomposition::from_blocks(op.mass().to_vec(), blocks, true);
    if let Spectrum::Lowest(k) = opts.spectrum {
        dec.truncate(k);
    }
    Ok(dec)
}

/// Conjugate gradients on `(Â + σ)x = b`.
fn cg_solve(op: &DiscreteOperator, sigma: f64, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = b.len();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = op.symmetric_apply(x).expect("shape checked");
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += sigma * xi);
        y
    };
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let max_iter = 20 * n + 100;
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * bnorm {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: rr.sqrt() / bnorm,
    })
}

/// Lowest `k` eigenpairs by shift-invert subspace iteration with
/// Rayleigh–Ritz projection. `σ` comes from a Gershgorin bound so that
/// `Â + σ` is positive definite; a block of `k + k/2 + 4` vectors resolves
/// repeated eigenvalues.
fn subspace_lowest(op: &DiscreteOperator, k: usize, vectors: bool) -> Result<SpectralDecomposition> {
    let n = op.len();
    if k == 0 {
        return Ok(SpectralDecomposition::from_blocks(op.mass().to_vec(), Vec::new(), false));
    }
    let width = (k + k / 2 + 4).min(n);
    let (lo, hi) = op.gershgorin();
    let sigma = (-lo).max(0.0) + 1e-3 * (hi - lo).abs().max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_705);
    let mut x: Vec<Vec<f64>> = (0..width)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    orthonormalize(&mut x);
    let tol = 1e-10;
    let max_iter = 300;
    let mut worst = f64::INFINITY;
    for iter in 1..=max_iter {
        let mut y = x
            .iter()
            .map(|col| cg_solve(op, sigma, col, 1e-14))
            .collect::<Result<Vec<_>>>()?;
        orthonormalize(&mut y);
        let ay = y.iter().map(|col| op.symmetric_apply(col)).collect::<Result<Vec<_>>>()?;
        let h = Mat::from_fn(width, width, |i, j| {
            0.5 * (dot(&y[i], &ay[j]) + dot(&y[j], &ay[i]))
        });
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::Eigensolver { size: width })?;
        let s = evd.S().column_vector();
        let v = evd.U();
        let combine = |basis: &[Vec<f64>], c: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (r, b) in basis.iter().enumerate() {
                let coef = v[(r, c)];
                out.iter_mut().zip(b).for_each(|(o, bi)| *o += coef * bi);
            }
            out
        };
        x = (0..width).map(|c| combine(&y, c)).collect();
        worst = 0.0f64;
        for c in 0..k {
            let ax = combine(&ay, c);
            let res = ax
                .iter()
                .zip(&x[c])
                .map(|(a, b)| (a - s[c] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(res / (1.0 + s[c].abs()));
        }
        if worst <= tol || (iter == max_iter && worst <= 1e-8) {
            let values: Vec<f64> = (0..k).map(|c| s[c]).collect();
            let vecs = vectors.then(|| Mat::from_fn(n, k, |i, c| x[c][i]));
            let block = EigenBlock {
                nodes: (0..n).collect(),
                values,
                vectors: vecs,
            };
            return Ok(SpectralDecomposition::from_blocks(op.mass().to_vec(), vec![block], false));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: worst,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram–Schmidt, two passes.
fn orthonormalize(cols: &mut [Vec<f64>]) {
    for j in 0..cols.len() {
        for _ in 0..2 {
            for i in 0..j {
                let c = dot(&cols[j], &cols[i]);
                let (head, tail) = cols.split_at_mut(j);
                tail[0].iter_mut().zip(&head[i]).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nrm = dot(&cols[j], &cols[j]).sqrt();
        cols[j].iter_mut().for_each(|v| *v /= nrm);
    }
}

impl SpectralDecomposition {
    fn from_blocks(mass: Vec<f64>, blocks: Vec<EigenBlock>, complete: bool) -> Self {
        let mut values: Vec<f64> = blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        values.sort_by(f64::total_cmp);
        SpectralDecomposition {
            values,
            mass,
            blocks,
            complete,
        }
    }

    /// Keeps the `k` lowest eigenpairs across all blocks.
    fn truncate(&mut self, k: usize) {
        if k >= self.values.len() {
            return;
        }
        let mut tagged: Vec<(f64, usize, usize)> = self
            .blocks
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| blk.values.iter().enumerate().map(move |(i, &v)| (v, b, i)))
            .collect();
        tagged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut keep: Vec<Vec<usize>> = vec![Vec::new(); self.blocks.len()];
        for &(_, b, i) in tagged.iter().take(k) {
            keep[b].push(i);
        }
        for (blk, idx) in self.blocks.iter_mut().zip(keep) {
            let mut idx = idx;
            idx.sort_unstable();
            blk.values = idx.iter().map(|&i| blk.values[i]).collect();
            if let Some(u) = &blk.vectors {
                let rows = u.nrows();
                blk.vectors = Some(Mat::from_fn(rows, idx.len(), |r, c| u[(r, idx[c])]));
            }
        }
        self.blocks.retain(|b| !b.values.is_empty());
        self.values.truncate(k);
        self.complete = false;
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// True when every eigenvalue of the operator is present.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn has_vectors(&self) -> bool {
        self.blocks.iter().all(|b| b.vectors.is_some())
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    fn require_vectors(&self) -> Result<()> {
        if self.has_vectors() {
            Ok(())
        } else {
            Err(Error::MissingEigenvectors)
        }
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::Shape {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// Eigenpairs `(λ, φ)` with `φ` `M`-orthonormal, in ascending order of `λ`.
    pub fn eigenpairs(&self) -> Result<Vec<(f64, Vec<f64>)>> {
        self.require_vectors()?;
        let mut out = Vec::with_capacity(self.values.len());
        for blk in &self.blocks {
            let u = blk.vectors.as_ref().expect("checked");
            for (c, &lambda) in blk.values.iter().enumerate() {
                let mut phi = vec![0.0; self.len()];
                for (r, &node) in blk.nodes.iter().enumerate() {
                    phi[node] = u[(r, c)] / self.mass[node].sqrt();
                }
                out.push((lambda, phi));
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(out)
    }

    /// `g(L)f = Σₖ g(λₖ)⟨φₖ, f⟩φₖ`.
    pub fn apply_function<G: Fn(f64) -> f64>(&self, g: G, f: &[f64]) -> Result<Vec<f64>> {
        self.require_vectors()?;
        self.check(f)?;
        let mut out = vec![0.0; self.len()];
        for blk in &self.blocks {
            let u = blk.vectors.as_ref().expect("checked");
            let rows = blk.nodes.len();
            let v = Mat::from_fn(rows, 1, |r, _| f[blk.nodes[r]] * self.mass[blk.nodes[r]].sqrt());
            let mut coef = u.transpose() * &v;
            for (c, &lambda) in blk.values.iter().enumerate() {
                coef[(c, 0)] *= g(lambda);
            }
            let back = u * &coef;
            for (r, &node) in blk.nodes.iter().enumerate() {
                out[node] = back[(r, 0)] / self.mass[node].sqrt();
            }
        }
        Ok(out)
    }

    /// `gⱼ(L)f` for `j < count` with one projection and one batched synthesis;
    /// `g(j, λ)` is the `j`-th function.
    pub fn apply_family<G: Fn(usize, f64) -> f64>(&self, count: usize, g: G, f: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.require_vectors()?;
        self.check(f)?;
        let mut out = vec![vec![0.0; self.len()]; count];
        for blk in &self.blocks {
            let u = blk.vectors.as_ref().expect("checked");
            let rows = blk.nodes.len();
            let v = Mat::from_fn(rows, 1, |r, _| f[blk.nodes[r]] * self.mass[blk.nodes[r]].sqrt());
            let coef = u.transpose() * &v;
            let scaled = Mat::from_fn(blk.values.len(), count, |c, j| g(j, blk.values[c]) * coef[(c, 0)]);
            let back = u * &scaled;
            for (j, col) in out.iter_mut().enumerate() {
                for (r, &node) in blk.nodes.iter().enumerate() {
                    col[node] = back[(r, j)] / self.mass[node].sqrt();
                }
            }
        }
        Ok(out)
    }

    /// Kernel diagonal `Σₖ g(λₖ)φₖ(x)²`.
    pub fn kernel_diagonal<G: Fn(f64) -> f64>(&self, g: G) -> Result<Vec<f64>> {
        self.require_vectors()?;
        let mut diag = vec![0.0; self.len()];
        for blk in &self.blocks {
            let u = blk.vectors.as_ref().expect("checked");
            for (c, &lambda) in blk.values.iter().enumerate() {
                let gl = g(lambda);
                if gl == 0.0 {
                    continue;
                }
                let col = u.col(c);
                for (r, &node) in blk.nodes.iter().enumerate() {
                    diag[node] += gl * col[r] * col[r];
                }
            }
        }
        for (v, m) in diag.iter_mut().zip(&self.mass) {
            *v /= m;
        }
        Ok(diag)
    }

    /// Full kernel `K(x, y) = Σₖ g(λₖ)φₖ(x)φₖ(y)`, so that
    /// `(g(L)f)(x) = Σ_y w_y K(x, y) f(y)`. Requires `g ≥ 0`.
    pub fn kernel_matrix<G: Fn(f64) -> f64>(&self, g: G) -> Result<Mat<f64>> {
        self.require_vectors()?;
        let n = self.len();
        let mut k = Mat::<f64>::zeros(n, n);
        for blk in &self.blocks {
            let u = blk.vectors.as_ref().expect("checked");
            let rows = blk.nodes.len();
            let root: Vec<f64> = blk.values.iter().map(|&l| g(l).max(0.0).sqrt()).collect();
            let p = Mat::from_fn(rows, blk.values.len(), |r, c| {
                u[(r, c)] * root[c] / self.mass[blk.nodes[r]].sqrt()
            });
            let kb = &p * p.transpose();
            for (a, &x) in blk.nodes.iter().enumerate() {
                for (b, &y) in blk.nodes.iter().enumerate() {
                    k[(x, y)] = kb[(a, b)];
                }
            }
        }
        Ok(k)
    }

    /// `Σₖ g(λₖ)` over the computed eigenvalues.
    pub fn trace_function<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.values.iter().map(|&l| g(l)).sum()
    }

    /// Largest `‖Lφ − λφ‖/(1 + |λ|)` and largest deviation from
    /// `M`-orthonormality.
    pub fn residuals(&self, op: &DiscreteOperator) -> Result<(f64, f64)> {
        let pairs = self.eigenpairs()?;
        let mut res = 0.0f64;
        for (lambda, phi) in &pairs {
            let lphi = op.apply(phi)?;
            let r: Vec<f64> = lphi.iter().zip(phi).map(|(a, b)| a - lambda * b).collect();
            res = res.max(op.norm(&r)? / (1.0 + lambda.abs()));
        }
        let mut orth = 0.0f64;
        for (i, (_, a)) in pairs.iter().enumerate() {
            for (j, (_, b)) in pairs.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                orth = orth.max((op.inner(a, b)? - target).abs());
            }
        }
        Ok((res, orth))
    }
}

//! Operators that are symmetric in a diagonal (lumped) inner product.
//!
//! An operator is stored as `L = M⁻¹S` with `S` sparse symmetric and `M`
//! the diagonal mass `⟨f, h⟩ = Σ mᵢ fᵢ hᵢ`. Its symmetric form
//! `M^{-1/2} S M^{-1/2}` has the same spectrum; eigenvectors `ψ` of the
//! symmetric form map to `M`-orthonormal eigenvectors `φ = M^{-1/2}ψ` of `L`.

use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    stiffness: CsMat<f64>,
    mass: Vec<f64>,
}

/// Triplet accumulator for a symmetric stiffness matrix.
#[derive(Debug)]
pub struct StiffnessBuilder {
    tri: TriMat<f64>,
}

impl StiffnessBuilder {
    pub fn new(n: usize) -> Self {
        StiffnessBuilder {
            tri: TriMat::new((n, n)),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.tri.add_triplet(i, j, v);
        }
    }

    /// Adds `c·(eᵢ − eⱼ)(eᵢ − eⱼ)ᵀ`.
    pub fn add_edge(&mut self, i: usize, j: usize, c: f64) {
        self.add(i, i, c);
        self.add(j, j, c);
        self.add(i, j, -c);
        self.add(j, i, -c);
    }

    pub fn finish(self) -> CsMat<f64> {
        self.tri.to_csr()
    }
}

impl DiscreteOperator {
    pub fn new(stiffness: CsMat<f64>, mass: Vec<f64>) -> Result<Self> {
        let n = mass.len();
        if stiffness.rows() != n || stiffness.cols() != n {
            return Err(Error::Shape {
                expected: n,
                got: stiffness.rows(),
            });
        }
        if let Some(m) = mass.iter().find(|&&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidMetric(format!("mass weight {m} is not positive")));
        }
        let stiffness = if stiffness.is_csr() { stiffness } else { stiffness.to_csr() };
        Ok(DiscreteOperator { stiffness, mass })
    }

    /// `c·I` in the inner product given by `mass`.
    pub fn scaled_identity(mass: Vec<f64>, c: f64) -> Result<Self> {
        let n = mass.len();
        let mut b = StiffnessBuilder::new(n);
        for (i, m) in mass.iter().enumerate() {
            b.add(i, i, c * m);
        }
        DiscreteOperator::new(b.finish(), mass)
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

    pub fn stiffness(&self) -> &CsMat<f64> {
        &self.stiffness
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

    fn stiffness_apply(&self, f: &[f64]) -> Vec<f64> {
        self.stiffness
            .outer_iterator()
            .map(|row| row.iter().map(|(j, v)| v * f[j]).sum())
            .collect()
    }

    /// `Lf = M⁻¹Sf`.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check(f)?;
        Ok(self
            .stiffness_apply(f)
            .into_iter()
            .zip(&self.mass)
            .map(|(s, m)| s / m)
            .collect())
    }

    /// `M^{-1/2} S M^{-1/2} ψ`.
    pub fn symmetric_apply(&self, psi: &[f64]) -> Result<Vec<f64>> {
        self.check(psi)?;
        let scaled: Vec<f64> = psi.iter().zip(&self.mass).map(|(v, m)| v / m.sqrt()).collect();
        Ok(self
            .stiffness_apply(&scaled)
            .into_iter()
            .zip(&self.mass)
            .map(|(s, m)| s / m.sqrt())
            .collect())
    }

    pub fn inner(&self, f: &[f64], h: &[f64]) -> Result<f64> {
        self.check(f)?;
        self.check(h)?;
        Ok(self.mass.iter().zip(f).zip(h).map(|((m, a), b)| m * a * b).sum())
    }

    pub fn norm(&self, f: &[f64]) -> Result<f64> {
        Ok(self.inner(f, f)?.sqrt())
    }

    /// `(L + V)` with `V` acting by pointwise multiplication.
    pub fn with_potential(&self, v: &[f64]) -> Result<Self> {
        self.check(v)?;
        let n = self.len();
        let mut diag = StiffnessBuilder::new(n);
        for (i, (vi, m)) in v.iter().zip(&self.mass).enumerate() {
            diag.add(i, i, vi * m);
        }
        let stiffness = &self.stiffness + &diag.finish();
        DiscreteOperator::new(stiffness, self.mass.clone())
    }

    pub fn shifted(&self, c: f64) -> Result<Self> {
        self.with_potential(&vec![c; self.len()])
    }

    /// `c·L`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        DiscreteOperator::new(self.stiffness.map(|v| c * v), self.mass.clone())
    }

    /// `L + c·L′` for operators on the same inner product.
    pub fn add_scaled(&self, other: &DiscreteOperator, c: f64) -> Result<Self> {
        if other.mass != self.mass {
            return Err(Error::Shape {
                expected: self.len(),
                got: other.len(),
            });
        }
        let scaled = other.stiffness.map(|v| c * v);
        DiscreteOperator::new(&self.stiffness + &scaled, self.mass.clone())
    }

    /// Entries `(i, j, value)` of the symmetric form.
    pub fn symmetric_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.stiffness.outer_iterator().enumerate().flat_map(move |(i, row)| {
            let mi = self.mass[i].sqrt();
            row.iter()
                .map(move |(j, v)| (i, j, v / (mi * self.mass[j].sqrt())))
                .collect::<Vec<_>>()
        })
    }

    /// Largest asymmetry `|Sᵢⱼ − Sⱼᵢ|` relative to `max |S|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.stiffness.transpose_view().to_csr();
        let diff = &self.stiffness - &t;
        let scale = self.stiffness.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = diff.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// Gershgorin interval of the symmetric form.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut diag = vec![0.0; self.len()];
        let mut radius = vec![0.0; self.len()];
        for (i, j, v) in self.symmetric_entries() {
            if i == j {
                diag[i] += v;
            } else {
                radius[i] += v.abs();
            }
        }
        for (c, r) in diag.iter().zip(&radius) {
            lo = lo.min(c - r);
            hi = hi.max(c + r);
        }
        (lo, hi)
    }

    /// Connected components of the sparsity graph, each sorted, ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, row) in self.stiffness.outer_iterator().enumerate() {
            for (j, v) in row.iter() {
                if *v != 0.0 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            if label[r] == usize::MAX {
                label[r] = comps.len();
                comps.push(Vec::new());
            }
            comps[label[r]].push(i);
        }
        comps
    }
}

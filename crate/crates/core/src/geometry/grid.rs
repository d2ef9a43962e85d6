use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest per-axis node count accepted.
pub const MIN_NODES_PER_AXIS: usize = 8;

/// Uniform periodic grid on `[0, L₁) × … × [0, L_d)`.
///
/// Node `k = (k₁, …, k_d)` sits at `xᵢ = kᵢ·Lᵢ/nᵢ`; the flat index is
/// row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: Vec<usize>,
    periods: Vec<f64>,
}

impl GridSpec {
    pub fn new(n: Vec<usize>, periods: Vec<f64>) -> Result<Self> {
        if n.len() < 3 {
            return Err(Error::InvalidGrid(format!("dimension {} < 3", n.len())));
        }
        if n.len() != periods.len() {
            return Err(Error::InvalidGrid(format!(
                "{} node counts but {} periods",
                n.len(),
                periods.len()
            )));
        }
        if let Some(k) = n.iter().find(|&&k| k < MIN_NODES_PER_AXIS) {
            return Err(Error::InvalidGrid(format!(
                "{k} nodes on an axis (minimum {MIN_NODES_PER_AXIS})"
            )));
        }
        if let Some(l) = periods.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidGrid(format!("period {l} is not positive")));
        }
        Ok(GridSpec { n, periods })
    }

    /// `n^d` nodes on the cube `[0, period)^d`.
    pub fn cubic(d: usize, n: usize, period: f64) -> Result<Self> {
        GridSpec::new(vec![n; d], vec![period; d])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.n
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    /// Total node count `N = ∏ nᵢ`.
    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.periods[axis] / self.n[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..].iter().product()
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut k = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            k[axis] = index % self.n[axis];
            index /= self.n[axis];
        }
        k
    }

    pub fn flat_index(&self, k: &[usize]) -> usize {
        k.iter()
            .zip(&self.n)
            .fold(0, |acc, (&ki, &ni)| acc * ni + ki % ni)
    }

    pub fn coords(&self, index: usize) -> Vec<f64> {
        self.multi_index(index)
            .iter()
            .enumerate()
            .map(|(a, &k)| k as f64 * self.spacing(a))
            .collect()
    }

    /// Index of the node displaced by `offset` grid steps (periodic wrap).
    pub fn shifted(&self, index: usize, offset: &[isize]) -> usize {
        let mut k = self.multi_index(index);
        for (axis, (&o, ki)) in offset.iter().zip(k.iter_mut()).enumerate() {
            let n = self.n[axis] as isize;
            *ki = ((*ki as isize + o).rem_euclid(n)) as usize;
        }
        self.flat_index(&k)
    }

    /// Neighbor one step along `axis` in direction `step` (±1).
    pub fn neighbor(&self, index: usize, axis: usize, step: isize) -> usize {
        let stride = self.stride(axis);
        let n = self.n[axis];
        let k = (index / stride) % n;
        let kn = (k as isize + step).rem_euclid(n as isize) as usize;
        index - k * stride + kn * stride
    }

    /// Same periods, node counts scaled by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        GridSpec::new(self.n.iter().map(|k| k * factor).collect(), self.periods.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(vec![8, 8], vec![1.0, 1.0]).is_err());
        assert!(GridSpec::new(vec![8, 8, 4], vec![1.0; 3]).is_err());
        assert!(GridSpec::new(vec![8, 8, 8], vec![1.0, 0.0, 1.0]).is_err());
        assert!(GridSpec::new(vec![8, 8, 8], vec![1.0; 2]).is_err());
    }

    #[test]
    fn indexing_round_trips_and_wraps() {
        let g = GridSpec::new(vec![8, 9, 10], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.len(), 720);
        for idx in [0, 1, 37, 719] {
            assert_eq!(g.flat_index(&g.multi_index(idx)), idx);
            for axis in 0..3 {
                let up = g.neighbor(idx, axis, 1);
                assert_eq!(g.neighbor(up, axis, -1), idx);
                let mut off = [0isize; 3];
                off[axis] = 1;
                assert_eq!(g.shifted(idx, &off), up);
            }
        }
        let last = g.flat_index(&[7, 8, 9]);
        assert_eq!(g.neighbor(last, 2, 1), g.flat_index(&[7, 8, 0]));
        let c = g.coords(g.flat_index(&[1, 2, 3]));
        assert!((c[0] - 0.125).abs() < 1e-15 && (c[1] - 4.0 / 9.0).abs() < 1e-15 && (c[2] - 0.9).abs() < 1e-15);
    }
}

//! Graph upper estimate of the Riemannian diameter.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use super::metric::MetricField;

/// Neighbour classes joined by graph edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// `±eᵢ`
    Axis,
    /// axis plus `±eᵢ ± eⱼ`
    Face,
    /// face plus every `{−1,0,1}^d` offset
    Full,
}

impl Stencil {
    pub fn offsets(self, d: usize) -> Vec<Vec<isize>> {
        let max_nonzero = match self {
            Stencil::Axis => 1,
            Stencil::Face => 2,
            Stencil::Full => d,
        };
        let mut out = Vec::new();
        let total = 3usize.pow(d as u32);
        for code in 0..total {
            let mut c = code;
            let off: Vec<isize> = (0..d)
                .map(|_| {
                    let v = (c % 3) as isize - 1;
                    c /= 3;
                    v
                })
                .collect();
            let nz = off.iter().filter(|&&v| v != 0).count();
            if nz > 0 && nz <= max_nonzero {
                out.push(off);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterEstimate {
    /// Largest graph distance found.
    pub value: f64,
    pub stencil: Stencil,
    /// Graph diameter of the flat metric on the same grid divided by the
    /// flat torus diameter `½√ΣLᵢ²`: the overestimate due to the stencil.
    pub anisotropy: f64,
    pub sources: usize,
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    dist: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| self.node.cmp(&other.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Weighted adjacency in compressed form.
#[derive(Debug, Clone)]
pub struct EdgeGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    lengths: Vec<f64>,
}

impl EdgeGraph {
    /// Edge `x → x+e` has length `½(√g_x(e,e) + √g_{x+e}(e,e))`.
    pub fn build(metric: &MetricField, grid: &GridSpec, stencil: Stencil) -> Self {
        let d = grid.dim();
        let steps = stencil.offsets(d);
        let h: Vec<f64> = (0..d).map(|a| grid.spacing(a)).collect();
        let diag: Vec<Vec<f64>> = (0..grid.len()).map(|i| metric.diagonal(&grid.coords(i))).collect();
        let len_at = |node: usize, off: &[isize]| -> f64 {
            off.iter()
                .enumerate()
                .map(|(a, &o)| diag[node][a] * (o as f64 * h[a]).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let mut offsets = Vec::with_capacity(grid.len() + 1);
        let mut targets = Vec::with_capacity(grid.len() * steps.len());
        let mut lengths = Vec::with_capacity(grid.len() * steps.len());
        offsets.push(0);
        for node in 0..grid.len() {
            for off in &steps {
                let y = grid.shifted(node, off);
                targets.push(y);
                lengths.push(0.5 * (len_at(node, off) + len_at(y, off)));
            }
            offsets.push(targets.len());
        }
        EdgeGraph {
            offsets,
            targets,
            lengths,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edges(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[node]..self.offsets[node + 1];
        self.targets[r.clone()].iter().copied().zip(self.lengths[r].iter().copied())
    }

    /// Single-source shortest distances.
    pub fn dijkstra(&self, source: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(State {
            dist: 0.0,
            node: source,
        });
        while let Some(State { dist: du, node: u }) = heap.pop() {
            if du > dist[u] {
                continue;
            }
            for (v, w) in self.edges(u) {
                let nd = du + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(State { dist: nd, node: v });
                }
            }
        }
        dist
    }

    /// Largest shortest-path distance over the given sources.
    pub fn eccentricity_max(&self, sources: impl IntoIterator<Item = usize>) -> f64 {
        sources
            .into_iter()
            .map(|s| self.dijkstra(s).into_iter().fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

/// Upper estimate of `diam(M, g)` from shortest paths on the grid graph.
///
/// For translation-invariant metrics one source suffices; otherwise every
/// node is a source.
pub fn diameter_upper(metric: &MetricField, grid: &GridSpec, stencil: Stencil) -> DiameterEstimate {
    let graph = EdgeGraph::build(metric, grid, stencil);
    let sources = if metric.is_translation_invariant() { 1 } else { grid.len() };
    let value = graph.eccentricity_max(0..sources);
    let flat = EdgeGraph::build(&MetricField::flat(grid), grid, stencil).eccentricity_max(0..1);
    let exact_flat = 0.5 * grid.periods().iter().map(|l| l * l).sum::<f64>().sqrt();
    DiameterEstimate {
        value,
        stencil,
        anisotropy: flat / exact_flat,
        sources,
    }
}

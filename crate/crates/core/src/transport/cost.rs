use crate::grid::Grid;
use crate::model::ModelSpec;

/// Dense cost `c̃` over nodes (interior cells then the two boundary nodes).
/// Boundary×boundary entries are forbidden and stored as `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub n_nodes: usize,
    pub n_cells: usize,
    pub tau: f64,
    entries: Vec<f64>,
}

impl CostMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n_nodes + j]
    }

    #[inline]
    pub fn is_forbidden(&self, i: usize, j: usize) -> bool {
        i >= self.n_cells && j >= self.n_cells
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n_nodes..(i + 1) * self.n_nodes]
    }

    pub fn transpose_entries(&self) -> Vec<f64> {
        let n = self.n_nodes;
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = self.entries[i * n + j];
            }
        }
        t
    }
}

/// Plain quadratic cost `|x − y|²/(2τ)` between nodes.
pub fn quadratic(g: &Grid, tau: f64, i: usize, j: usize) -> f64 {
    let d = g.node_position(i) - g.node_position(j);
    d * d / (2.0 * tau)
}

/// `c̃(i, j) = |x_i − x_j|²/(2τ) + Ψ(x_j)·1[interior→boundary] − Ψ(x_i)·1[boundary→interior]`.
pub fn build_cost_matrix(g: &Grid, spec: &ModelSpec, tau: f64) -> CostMatrix {
    let n = g.n_nodes();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let c = match (g.side_of(i), g.side_of(j)) {
                (Some(_), Some(_)) => f64::INFINITY,
                (None, Some(sj)) => quadratic(g, tau, i, j) + spec.psi.get(sj),
                (Some(si), None) => quadratic(g, tau, i, j) - spec.psi.get(si),
                (None, None) => quadratic(g, tau, i, j),
            };
            entries[i * n + j] = c;
        }
    }
    CostMatrix { n_nodes: n, n_cells: g.n_cells, tau, entries }
}

/// Cost used for cyclical-monotonicity checks: `c̃` with boundary×boundary set to 0.
pub fn cycle_cost(c: &CostMatrix, i: usize, j: usize) -> f64 {
    if c.is_forbidden(i, j) {
        0.0
    } else {
        c.get(i, j)
    }
}

use crate::grid::Grid;
use crate::model::ModelSpec;
use crate::transport::cost::quadratic;
use crate::transport::TransportSolution;

#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub phi: Vec<f64>,
    pub phi_star: Vec<f64>,
    pub kappa: f64,
    /// `max_j |φ*_j + e′(h_j) − κ|`.
    pub kkt_residual: f64,
    /// `max_j |e′(h_j) − log ρ_j − V_j|` (meaningful for JKO steps).
    pub jko_residual: f64,
    /// `max (φ(x) + φ*(y) − |x − y|²/2τ)₊` over allowed node pairs.
    pub c_concavity_gap: f64,
    /// `min (φ(x) + φ*(y) − |x − y|²/2τ)` over supported pairs; ≈ 0 at optimality.
    pub min_support_slack: f64,
}

/// Mass-weighted median of `values` (lower median on ties).
pub fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    if total <= 0.0 {
        return values[idx[idx.len() / 2]];
    }
    let mut acc = 0.0;
    for &k in &idx {
        acc += weights[k].max(0.0);
        if acc >= 0.5 * total {
            return values[k];
        }
    }
    values[*idx.last().unwrap()]
}

pub fn extract_potentials(sol: &TransportSolution, spec: &ModelSpec, g: &Grid) -> Potentials {
    let n = sol.n_cells;
    let nn = sol.n_nodes();
    let tau = sol.tau;
    let col_mass: Vec<f64> = (0..n).map(|j| g.dx * (sol.rho[j] + tau * sol.h[j])).collect();
    let terms: Vec<f64> = (0..n).map(|j| sol.phi_star[j] + spec.e_prime(sol.h[j], g.cell_centers[j])).collect();
    let kappa = weighted_median(&terms, &col_mass);
    let kkt_residual = terms.iter().map(|t| (t - kappa).abs()).fold(0.0, f64::max);
    let jko_residual = (0..n)
        .map(|j| {
            let x = g.cell_centers[j];
            (spec.e_prime(sol.h[j], x) - sol.rho[j].ln() - spec.v_at(x)).abs()
        })
        .fold(0.0, f64::max);
    let floor = sol.mass_floor();
    let (mut gap, mut slack) = (0.0f64, f64::INFINITY);
    for i in 0..nn {
        for j in 0..nn {
            if g.is_boundary(i) && g.is_boundary(j) {
                continue;
            }
            let d = sol.phi[i] + sol.phi_star[j] - quadratic(g, tau, i, j);
            gap = gap.max(d);
            if sol.gamma(i, j) > floor {
                slack = slack.min(d);
            }
        }
    }
    Potentials {
        phi: sol.phi.clone(),
        phi_star: sol.phi_star.clone(),
        kappa,
        kkt_residual,
        jko_residual,
        c_concavity_gap: gap.max(0.0),
        min_support_slack: slack,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportMaps {
    /// Barycentric target of each interior row; `None` for empty rows.
    pub t: Vec<Option<f64>>,
    pub t_spread: Vec<Option<f64>>,
    /// Barycentric source of each interior column; `None` for empty columns.
    pub s: Vec<Option<f64>>,
    pub s_spread: Vec<Option<f64>>,
}

pub fn extract_transport_maps(sol: &TransportSolution, g: &Grid) -> TransportMaps {
    let n = sol.n_cells;
    let nn = sol.n_nodes();
    let pos: Vec<f64> = (0..nn).map(|k| g.node_position(k)).collect();
    let bary = |pairs: &mut dyn Iterator<Item = (f64, f64)>| -> (Option<f64>, Option<f64>) {
        let v: Vec<(f64, f64)> = pairs.collect();
        let m: f64 = v.iter().map(|p| p.0).sum();
        if m <= 0.0 {
            return (None, None);
        }
        let mean = v.iter().map(|p| p.0 * p.1).sum::<f64>() / m;
        let spread = v.iter().map(|p| p.0 * (p.1 - mean).powi(2)).sum::<f64>() / m;
        (Some(mean), Some(spread))
    };
    let mut maps = TransportMaps { t: vec![], t_spread: vec![], s: vec![], s_spread: vec![] };
    for i in 0..n {
        let (m, s) = bary(&mut (0..nn).map(|j| (sol.gamma(i, j), pos[j])));
        maps.t.push(m);
        maps.t_spread.push(s);
    }
    for j in 0..n {
        let (m, s) = bary(&mut (0..nn).map(|i| (sol.gamma(i, j), pos[i])));
        maps.s.push(m);
        maps.s_spread.push(s);
    }
    maps
}

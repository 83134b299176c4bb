//! Structural diagnostics of a solved step: displacement, boundary flux, created
//! mass, energy-inequality terms, perturbation inequalities on supported pairs,
//! cyclical monotonicity and the transported-mass lower bound.

#![allow(clippy::needless_range_loop)]

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::{Grid, Side};
use crate::model::{psi_moment, ModelSpec};
use crate::transport::cost::{build_cost_matrix, cycle_cost, quadratic};
use crate::transport::{Density, TransportSolution};

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub max_displacement: f64,
    pub boundary_flux: f64,
    pub created_mass_l1: f64,
    pub created_mass_linf: f64,
    pub quadratic_cost: f64,
    pub kappa_ratio_min: f64,
    pub kappa_ratio_max: f64,
    /// `E_before − ∫Ψdμ − E_after + ∫Ψdμ_τ + τ`.
    pub energy_inequality_rhs: f64,
    pub optimality_residual: f64,
    /// `m_r ≤ h ≤ m_R + 1` with the radii `r`, `R` below.
    pub created_window_ok: bool,
    pub window_r: f64,
    pub window_big_r: f64,
    /// `max |ρ_τ(first/last cell) − e^{Ψ−V}|`.
    pub trace_gap: f64,
    pub mass_floor: f64,
}

pub fn window_radii(g: &Grid, spec: &ModelSpec, tau: f64) -> (f64, f64) {
    let diam2 = g.length().powi(2);
    let psi = spec.psi.max_abs();
    (-diam2 / (2.0 * tau) - psi - 1.0, diam2 / tau + 2.0 * psi + 1.0)
}

#[allow(clippy::too_many_arguments)]
pub fn run_diagnostics(
    sol: &TransportSolution,
    g: &Grid,
    spec: &ModelSpec,
    tau: f64,
    mu: &Density,
    rho_tau: &Density,
    e_before: f64,
    e_after: f64,
) -> DiagnosticsReport {
    let n = sol.n_cells;
    let nn = sol.n_nodes();
    let floor = sol.mass_floor();
    let (mut disp, mut flux, mut qc) = (0.0f64, 0.0, 0.0);
    for i in 0..nn {
        for j in 0..nn {
            let m = sol.gamma(i, j);
            if m <= 0.0 {
                continue;
            }
            qc += m * quadratic(g, tau, i, j);
            if g.is_boundary(i) || g.is_boundary(j) {
                flux += m;
            }
            if m > floor {
                disp = disp.max((g.node_position(i) - g.node_position(j)).abs());
            }
        }
    }
    let created_mass_l1 = sol.h.iter().map(|h| h.abs() * g.dx).sum();
    let created_mass_linf = sol.h.iter().fold(0.0f64, |a, h| a.max(h.abs()));
    let rho = rho_tau.density(g);
    let (mut kmin, mut kmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..n {
        let r = rho[j] / (rho[j] + tau * sol.h[j]);
        kmin = kmin.min(r);
        kmax = kmax.max(r);
    }
    let energy_inequality_rhs =
        e_before - psi_moment(spec, g, &mu.cell_mass) - e_after + psi_moment(spec, g, &rho_tau.cell_mass) + tau;
    let optimality_residual = (0..n)
        .map(|j| (sol.phi_star[j] + spec.e_prime(sol.h[j], g.cell_centers[j]) - sol.kappa).abs())
        .fold(0.0, f64::max);
    let (r, big_r) = window_radii(g, spec, tau);
    let created_window_ok = (0..n).all(|j| {
        let x = g.cell_centers[j];
        spec.e_prime_inverse(r, x) <= sol.h[j] && sol.h[j] <= spec.e_prime_inverse(big_r, x) + 1.0
    });
    let trace = |side: Side, cell: usize| (rho[cell] - (spec.psi.get(side) - spec.v_at(g.boundary_point(side))).exp()).abs();
    let trace_gap = trace(Side::Lower, 0).max(trace(Side::Upper, n - 1));
    DiagnosticsReport {
        max_displacement: disp,
        boundary_flux: flux,
        created_mass_l1,
        created_mass_linf,
        quadratic_cost: qc,
        kappa_ratio_min: kmin,
        kappa_ratio_max: kmax,
        energy_inequality_rhs,
        optimality_residual,
        created_window_ok,
        window_r: r,
        window_big_r: big_r,
        trace_gap,
        mass_floor: floor,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub pairs_checked: usize,
    pub inequalities_checked: usize,
    /// Largest `lhs − rhs` found, with its label.
    pub worst_violation: f64,
    pub worst_label: String,
}

impl InequalityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.worst_violation <= tol
    }
}

/// Supported pairs `(row, col)` with plan mass above the mass floor.
pub fn supported_pairs(sol: &TransportSolution) -> Vec<(usize, usize)> {
    let nn = sol.n_nodes();
    let floor = sol.mass_floor();
    let mut out = Vec::new();
    for i in 0..nn {
        for j in 0..nn {
            if sol.gamma(i, j) > floor {
                out.push((i, j));
            }
        }
    }
    out
}

/// Checks the perturbation inequalities on up to `samples` supported pairs
/// (drawn without replacement with a fixed seed).
pub fn perturbation_inequalities(sol: &TransportSolution, g: &Grid, spec: &ModelSpec, samples: usize, seed: u64) -> InequalityReport {
    let n = sol.n_cells;
    let tau = sol.tau;
    let support = supported_pairs(sol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = if support.len() <= samples {
        (0..support.len()).collect()
    } else {
        sample(&mut rng, support.len(), samples).into_vec()
    };
    let ep: Vec<f64> = (0..n).map(|j| spec.e_prime(sol.h[j], g.cell_centers[j])).collect();
    let cq = |a: usize, b: usize| quadratic(g, tau, a, b);
    let psi = |b: usize| spec.psi.get(g.side_of(b).expect("boundary node"));
    let bnodes = [g.boundary_index(Side::Lower), g.boundary_index(Side::Upper)];
    let mut rep = InequalityReport { pairs_checked: picks.len(), inequalities_checked: 0, worst_violation: f64::NEG_INFINITY, worst_label: String::new() };
    let note = |v: f64, label: &str, rep: &mut InequalityReport| {
        rep.inequalities_checked += 1;
        if v > rep.worst_violation {
            rep.worst_violation = v;
            rep.worst_label = label.to_string();
        }
    };
    for k in picks {
        let (x, y) = support[k];
        if y < n {
            let lhs = ep[y] + cq(x, y);
            for y2 in 0..n {
                note(lhs - (ep[y2] + cq(x, y2)), "column exchange (interior)", &mut rep);
            }
            if x < n {
                for &b in &bnodes {
                    note(lhs - (cq(x, b) + psi(b)), "column exchange (boundary)", &mut rep);
                }
            } else {
                let lhs_b = cq(y, x) - psi(x);
                for &b in &bnodes {
                    note(lhs_b - (cq(y, b) - psi(b)), "boundary source choice", &mut rep);
                }
                note(lhs_b + ep[y], "boundary source against creation", &mut rep);
            }
            for &b in &bnodes {
                note(-(ep[y] + cq(y, b) - psi(b)), "creation against boundary supply", &mut rep);
            }
        } else if x < n {
            let lhs = cq(x, y) + psi(y);
            for y1 in 0..n {
                note(lhs - (ep[y1] + cq(x, y1)), "boundary sink against creation", &mut rep);
            }
            for &b in &bnodes {
                note(lhs - (cq(x, b) + psi(b)), "boundary sink choice", &mut rep);
            }
        }
    }
    if rep.inequalities_checked == 0 {
        rep.worst_violation = 0.0;
    }
    rep
}

/// Spot-checks `c̃`-cyclical monotonicity on random 2- and 3-cycles drawn from
/// the support together with boundary×boundary pairs. Returns the largest
/// violation `Σ c̃(x_k, y_k) − Σ c̃(x_k, y_{k+1})`.
pub fn cyclical_monotonicity(sol: &TransportSolution, g: &Grid, spec: &ModelSpec, cycles: usize, seed: u64) -> f64 {
    let cost = build_cost_matrix(g, spec, sol.tau);
    let mut pairs = supported_pairs(sol);
    for a in [g.n_cells, g.n_cells + 1] {
        for b in [g.n_cells, g.n_cells + 1] {
            pairs.push((a, b));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for c in 0..cycles {
        let len = 2 + c % 2;
        if pairs.len() < len {
            break;
        }
        let idx = sample(&mut rng, pairs.len(), len).into_vec();
        let sel: Vec<(usize, usize)> = idx.iter().map(|&k| pairs[k]).collect();
        let base: f64 = sel.iter().map(|&(x, y)| cycle_cost(&cost, x, y)).sum();
        let shifted: f64 = (0..len).map(|k| cycle_cost(&cost, sel[k].0, sel[(k + 1) % len].1)).sum();
        worst = worst.max(base - shifted);
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportedMassCheck {
    pub lambda0: f64,
    pub threshold: f64,
    pub hypotheses_hold: bool,
    pub min_transported: f64,
    pub holds: bool,
}

/// Largest `τ` (on a dyadic scan) for which the constructive recipe of the
/// transported-mass bound applies for the given `λ₀` and target densities.
pub fn transported_mass_threshold(g: &Grid, spec: &ModelSpec, lambda0: f64, rho: &[f64]) -> f64 {
    let a_max = g.cell_centers.iter().map(|&x| spec.domain_lower(x)).fold(f64::NEG_INFINITY, f64::max);
    if a_max.is_finite() {
        let a_abs = g.cell_centers.iter().map(|&x| spec.domain_lower(x).abs()).fold(0.0, f64::max);
        return if a_abs == 0.0 { f64::INFINITY } else { 0.75 * lambda0 / a_abs };
    }
    let psi = spec.psi.max_abs();
    let mut tau = 1.0;
    for _ in 0..60 {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, -psi);
        for (j, &x) in g.cell_centers.iter().enumerate() {
            let l = (0.25 * lambda0 - rho[j]) / tau;
            let u = (0.5 * lambda0 - rho[j]) / tau;
            lo = lo.max(spec.e_prime(l, x));
            hi = hi.min(spec.e_prime(u, x));
        }
        if lo < hi {
            return tau;
        }
        tau *= 0.5;
    }
    0.0
}

pub fn transported_mass_check(sol: &TransportSolution, g: &Grid, spec: &ModelSpec) -> TransportedMassCheck {
    let mu = sol.mu.iter().map(|m| m / g.dx).fold(f64::INFINITY, f64::min);
    let rho_min = sol.rho.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda0 = mu.min(rho_min);
    let threshold = transported_mass_threshold(g, spec, lambda0, &sol.rho);
    let hypotheses_hold = lambda0 > 0.0 && sol.tau < threshold;
    let min_transported = (0..sol.n_cells).map(|j| sol.rho[j] + sol.tau * sol.h[j]).fold(f64::INFINITY, f64::min);
    let holds = !hypotheses_hold || min_transported >= 0.25 * lambda0;
    TransportedMassCheck { lambda0, threshold, hypotheses_hold, min_transported, holds }
}

//! Iterated `L∞` barriers
//! `(1+C₀τ)^{−n} λ e^{−V}/sup e^{−V} ≤ ρ_n ≤ Λ e^{−V}/inf e^{−V}`.

use crate::flow::Trajectory;
use crate::grid::{Grid, Side};
use crate::model::{validate_assumptions, ModelSpec};
use crate::transport::Density;

/// Relative slack allowed in envelope comparisons.
const SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierBounds {
    pub lambda: f64,
    pub big_lambda: f64,
    pub c0: f64,
    /// Largest admissible `ε` with `λ < ε < 1/ε < Λ`.
    pub eps_window: f64,
    pub sup_exp_neg_v: f64,
    pub inf_exp_neg_v: f64,
    /// `λ` or `Λ` had to be moved to satisfy the window.
    pub clipped: bool,
}

/// Window `ε` from the small-mass constant, the boundary data and the zero of `F′`.
pub fn barrier_window(spec: &ModelSpec, g: &Grid, s: f64) -> f64 {
    let rd_min = Side::BOTH.iter().map(|&side| spec.rho_d.get(side)).fold(f64::INFINITY, f64::min);
    let rd_max = Side::BOTH.iter().map(|&side| spec.rho_d.get(side)).fold(0.0, f64::max);
    let r0_max = g
        .cell_centers
        .iter()
        .chain(g.boundary_nodes().iter())
        .filter_map(|&x| spec.cost.r_of(0.0, x))
        .fold(0.0, f64::max);
    s.min(rd_min).min(1.0 / rd_max).min(1.0 / r0_max.max(1e-300))
}

impl BarrierBounds {
    pub fn calibrate(spec: &ModelSpec, g: &Grid, rho0: &Density) -> Self {
        let audit = spec.audit.clone().unwrap_or_else(|| validate_assumptions(spec, g, 400));
        let sup = spec.sup_exp_neg_v(g);
        let inf = spec.inf_exp_neg_v(g);
        let rho = rho0.density(g);
        let (mut lambda, mut big_lambda) = (f64::INFINITY, 0.0f64);
        for (r, &x) in rho.iter().zip(&g.cell_centers) {
            let env = (-spec.v_at(x)).exp();
            lambda = lambda.min(r * sup / env);
            big_lambda = big_lambda.max(r * inf / env);
        }
        let eps = barrier_window(spec, g, audit.s);
        let mut clipped = false;
        if lambda >= eps {
            lambda = 0.99 * eps;
            clipped = true;
        }
        if big_lambda <= 1.0 / eps {
            big_lambda = 1.01 / eps;
            clipped = true;
        }
        BarrierBounds { lambda, big_lambda, c0: audit.c0, eps_window: eps, sup_exp_neg_v: sup, inf_exp_neg_v: inf, clipped }
    }

    pub fn lower(&self, step: usize, tau: f64, v: f64) -> f64 {
        (1.0 + self.c0 * tau).powi(-(step as i32)) * self.lambda / self.sup_exp_neg_v * (-v).exp()
    }

    pub fn continuum_lower(&self, t: f64, v: f64) -> f64 {
        self.lambda / self.sup_exp_neg_v * (-(self.c0 * t + v)).exp()
    }

    pub fn upper(&self, v: f64) -> f64 {
        self.big_lambda / self.inf_exp_neg_v * (-v).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepBarrier {
    pub step: usize,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub continuum_ok: bool,
    /// Smallest relative distance to either envelope (negative when violated).
    pub worst_margin: f64,
    pub worst_cell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierReport {
    pub steps: Vec<StepBarrier>,
    pub violations: usize,
}

impl BarrierReport {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

pub fn barrier_check(traj: &Trajectory, spec: &ModelSpec, g: &Grid) -> BarrierReport {
    let b = &traj.barrier;
    let mut steps = Vec::with_capacity(traj.len());
    let mut violations = 0;
    for snap in &traj.snapshots {
        let rho = snap.rho.density(g);
        let mut sb =
            StepBarrier { step: snap.step, lower_ok: true, upper_ok: true, continuum_ok: true, worst_margin: f64::INFINITY, worst_cell: 0 };
        for (i, (&r, &x)) in rho.iter().zip(&g.cell_centers).enumerate() {
            let v = spec.v_at(x);
            let lo = b.lower(snap.step, traj.tau, v);
            let hi = b.upper(v);
            let lo_c = b.continuum_lower(snap.t, v);
            sb.lower_ok &= r >= lo * (1.0 - SLACK);
            sb.upper_ok &= r <= hi * (1.0 + SLACK);
            sb.continuum_ok &= r >= lo_c * (1.0 - SLACK);
            let margin = ((r - lo) / lo).min((hi - r) / hi);
            if margin < sb.worst_margin {
                sb.worst_margin = margin;
                sb.worst_cell = i;
            }
        }
        if !(sb.lower_ok && sb.upper_ok && sb.continuum_ok) {
            violations += 1;
        }
        steps.push(sb);
    }
    BarrierReport { steps, violations }
}

//! Energy bookkeeping along a trajectory and τ-refinement studies against a
//! finite-difference reference.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{run_minimizing_movement, Trajectory};
use crate::grid::Grid;
use crate::model::{psi_moment, ModelSpec};
use crate::pde::{compare_trajectories, FDSolution};
use crate::transport::{solve_fixed_target, Density, SolverOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub step: usize,
    pub e_before: f64,
    pub e_after: f64,
    /// `Wb(ρ_n, ρ_{n+1})`.
    pub step_cost: f64,
    /// `Wb(ρ_n, ρ_n)`, computed rather than assumed zero.
    pub self_cost: f64,
    /// `E(ρ_n) + Wb(ρ_n, ρ_n) − E(ρ_{n+1}) − Wb(ρ_n, ρ_{n+1})`; non-negative by minimality.
    pub slack: f64,
}

pub fn energy_ledger(traj: &Trajectory, g: &Grid, spec: &ModelSpec, opts: &SolverOptions) -> Result<Vec<LedgerEntry>> {
    let mut out = Vec::with_capacity(traj.len().saturating_sub(1));
    for w in traj.snapshots.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let rec = next.record.as_ref().ok_or_else(|| Error::InvalidArgument("snapshot without step record".into()))?;
        let self_cost = solve_fixed_target(g, spec, traj.tau, &prev.rho, &prev.rho, opts)?.primal_value;
        out.push(LedgerEntry {
            step: next.step,
            e_before: prev.energy,
            e_after: next.energy,
            step_cost: rec.primal_value,
            self_cost,
            slack: prev.energy + self_cost - next.energy - rec.primal_value,
        });
    }
    Ok(out)
}

/// Largest per-step ratio `quadratic_cost / energy_inequality_rhs` over the given trajectories.
pub fn fit_energy_constant(trajs: &[&Trajectory]) -> f64 {
    let mut c = 0.0f64;
    for t in trajs {
        for rec in t.records() {
            if let Some(d) = &rec.diagnostics {
                if d.energy_inequality_rhs > 0.0 {
                    c = c.max(d.quadratic_cost / d.energy_inequality_rhs);
                }
            }
        }
    }
    c
}

/// Steps at which `quadratic_cost ≤ C · energy_inequality_rhs` fails.
pub fn energy_inequality_check(traj: &Trajectory, c: f64) -> Vec<usize> {
    traj.snapshots
        .iter()
        .filter_map(|s| {
            let d = s.record.as_ref()?.diagnostics.as_ref()?;
            (d.quadratic_cost > c * d.energy_inequality_rhs).then_some(s.step)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Telescoping {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `Σ_n quadratic_cost_n ≤ C (E(ρ₀) − ∫Ψρ₀ − E(ρ_N) + ∫Ψρ_N + Nτ)`.
pub fn telescoping_check(traj: &Trajectory, g: &Grid, spec: &ModelSpec, c: f64) -> Telescoping {
    let lhs: f64 = traj.records().filter_map(|r| r.diagnostics.as_ref()).map(|d| d.quadratic_cost).sum();
    let first = &traj.snapshots[0];
    let last = traj.last();
    let n = (traj.len() - 1) as f64;
    let rhs = c
        * (first.energy - psi_moment(spec, g, &first.rho.cell_mass) - last.energy
            + psi_moment(spec, g, &last.rho.cell_mass)
            + n * traj.tau);
    Telescoping { lhs, rhs, holds: lhs <= rhs }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementRow {
    pub tau: f64,
    pub steps: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementStudy {
    pub rows: Vec<RefinementRow>,
    /// Least-squares slope of `log error` against `log τ`; `None` when some error vanishes.
    pub order: Option<f64>,
}

impl RefinementStudy {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }
}

pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn tau_refinement_study(
    g: &Grid,
    spec: &ModelSpec,
    rho0: &Density,
    t_final: f64,
    tau_list: &[f64],
    reference: &FDSolution,
    opts: &SolverOptions,
) -> Result<RefinementStudy> {
    if tau_list.len() < 3 {
        return Err(Error::InvalidArgument("tau list needs at least 3 entries".into()));
    }
    if !tau_list.windows(2).all(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("tau list must be strictly decreasing".into()));
    }
    let rg = &reference.grid;
    if (rg.x_lo - g.x_lo).abs() > 1e-12 || (rg.x_hi - g.x_hi).abs() > 1e-12 || rg.n_cells % g.n_cells != 0 {
        return Err(Error::InvalidArgument("reference grid is not a refinement of the trajectory grid".into()));
    }
    let rows: Result<Vec<RefinementRow>> = tau_list
        .par_iter()
        .map(|&tau| {
            let traj = run_minimizing_movement(g, spec, rho0, tau, t_final, opts)?;
            let error = compare_trajectories(&traj, g, reference, t_final)?;
            Ok(RefinementRow { tau, steps: traj.len() - 1, error })
        })
        .collect();
    let rows = rows?;
    let order = if rows.iter().all(|r| r.error > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| r.tau.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.error.ln()).collect();
        Some(fit_slope(&xs, &ys))
    } else {
        None
    };
    Ok(RefinementStudy { rows, order })
}

//! Minimizing-movement trajectories `ρ^τ(t) = ρ^τ_{[t/τ]}` built by iterating
//! the JKO step, with barrier envelopes, energy bookkeeping and τ-refinement.

pub mod barrier;
pub mod study;

pub use barrier::{barrier_check, BarrierBounds, BarrierReport, StepBarrier};
pub use study::{
    energy_inequality_check, energy_ledger, fit_energy_constant, tau_refinement_study, telescoping_check, LedgerEntry,
    RefinementRow, RefinementStudy, Telescoping,
};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{entropy_eval, ModelSpec};
use crate::transport::{run_diagnostics, solve_with_init, Density, DualState, SolverOptions, TransportSolution};

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub rho: Density,
    pub energy: f64,
    /// Solution of the step that produced this snapshot; `None` for the initial datum.
    pub record: Option<TransportSolution>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tau: f64,
    pub t_final: f64,
    pub snapshots: Vec<Snapshot>,
    pub barrier: BarrierBounds,
    pub warnings: Vec<String>,
}

/// Number of steps needed to reach `t_final`, `⌈t_final/τ⌉`, robust to round-off.
pub fn step_count(tau: f64, t_final: f64) -> usize {
    let r = t_final / tau;
    let k = r.round();
    if (r - k).abs() <= 1e-9 * r.max(1.0) {
        k as usize
    } else {
        r.ceil() as usize
    }
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory holds the initial datum")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn densities(&self, g: &Grid) -> Vec<Vec<f64>> {
        self.snapshots.iter().map(|s| s.rho.density(g)).collect()
    }

    pub fn records(&self) -> impl Iterator<Item = &TransportSolution> {
        self.snapshots.iter().filter_map(|s| s.record.as_ref())
    }
}

pub fn run_minimizing_movement(
    g: &Grid,
    spec: &ModelSpec,
    rho0: &Density,
    tau: f64,
    t_final: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    if !(tau > 0.0 && tau < t_final) {
        return Err(Error::InvalidArgument(format!("need 0 < tau < t_final, got tau = {tau}, t_final = {t_final}")));
    }
    if rho0.len() != g.n_cells {
        return Err(Error::InvalidArgument("initial density length differs from the number of cells".into()));
    }
    for (i, &m) in rho0.cell_mass.iter().enumerate() {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::NegativeDensity { cell: i, value: m / g.dx });
        }
    }
    let barrier = BarrierBounds::calibrate(spec, g, rho0);
    let mut warnings = Vec::new();
    if barrier.clipped {
        warnings.push("barrier constants widened to satisfy lambda < eps < 1/eps < Lambda".into());
    }
    let steps = step_count(tau, t_final);
    let mut snapshots = Vec::with_capacity(steps + 1);
    let e0 = entropy_eval(spec, g, rho0)?;
    snapshots.push(Snapshot { step: 0, t: 0.0, rho: rho0.clone(), energy: e0, record: None });
    let mut init: Option<DualState> = None;
    for n in 1..=steps {
        let prev = snapshots.last().expect("non-empty");
        let mu = prev.rho.clone();
        let e_before = prev.energy;
        let mut sol = solve_with_init(g, spec, tau, &mu, None, opts, init.as_ref())
            .map_err(|e| Error::StepFailure { step: n, message: e.to_string() })?;
        if !sol.convergence.converged {
            return Err(Error::StepFailure {
                step: n,
                message: format!("solver did not converge (residual {:e})", sol.convergence.marginal_residual),
            });
        }
        let rho = sol.rho_density(g);
        let e_after = entropy_eval(spec, g, &rho)?;
        sol.diagnostics = Some(run_diagnostics(&sol, g, spec, tau, &mu, &rho, e_before, e_after));
        for w in &sol.warnings {
            warnings.push(format!("step {n}: {w}"));
        }
        init = Some(sol.state.clone());
        snapshots.push(Snapshot { step: n, t: n as f64 * tau, rho, energy: e_after, record: Some(sol) });
    }
    Ok(Trajectory { tau, t_final, snapshots, barrier, warnings })
}

/// `ρ^τ(t) = ρ^τ_{[t/τ]}`.
pub fn trajectory_interpolate(traj: &Trajectory, t: f64) -> Result<&Density> {
    if !(t >= 0.0 && t <= traj.t_final * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!("time {t} outside [0, {}]", traj.t_final)));
    }
    let k = ((t / traj.tau) * (1.0 + 1e-12)).floor() as usize;
    Ok(&traj.snapshots[k.min(traj.snapshots.len() - 1)].rho)
}

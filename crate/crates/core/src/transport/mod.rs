//! The transport problem with boundary reservoir and creation field.
//!
//! For interior cell masses `μ` and a target `ρ` (fixed, or free in the JKO
//! step) the solver minimizes `Σ c̃ γ + τ Σ e(h_j) Δx` (plus `Σ 𝓔(ρ_j) Δx` in
//! the JKO step) over plans `γ` on nodes × nodes whose interior row sums are
//! `μ_i` and whose interior column sums are `(ρ_j + τ h_j) Δx`. Boundary rows and
//! columns are unconstrained and boundary×boundary pairs carry no mass.
//!
//! Dual potentials are reported in the gauge `φ = Ψ`, `φ* = −Ψ` on the boundary,
//! for which dual feasibility reads `φ(x) + φ*(y) ≤ |x − y|²/(2τ)`.

pub mod columns;
pub mod cost;
pub mod diagnostics;
pub mod oracle;
pub mod polish;
pub mod potentials;
pub mod scaling;

pub use columns::{Columns, Target};
pub use cost::{build_cost_matrix, CostMatrix};
pub use diagnostics::{run_diagnostics, DiagnosticsReport};
pub use oracle::{brute_force_small, OracleOptions, OracleResult};
pub use potentials::{extract_potentials, extract_transport_maps, Potentials, TransportMaps};
pub use scaling::{generalized_scaling_solve, DualState, ScalingOutcome, ScalingProblem, ScalingSchedule};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::ModelSpec;

/// Densities below this value are raised to it before solving.
pub const DENSITY_FLOOR: f64 = 1e-10;
/// Relative mass below which a plan entry is not considered supported.
pub const MASS_FLOOR_REL: f64 = 1e-12;

/// Non-negative cell masses on the interior cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub cell_mass: Vec<f64>,
}

impl Density {
    pub fn from_density(g: &Grid, rho: &[f64]) -> Self {
        Density { cell_mass: rho.iter().map(|r| r * g.dx).collect() }
    }

    pub fn constant(g: &Grid, rho: f64) -> Self {
        Density { cell_mass: vec![rho * g.dx; g.n_cells] }
    }

    pub fn density(&self, g: &Grid) -> Vec<f64> {
        self.cell_mass.iter().map(|m| m / g.dx).collect()
    }

    pub fn total(&self) -> f64 {
        self.cell_mass.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.cell_mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_mass.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Marginal residual tolerance, relative to total mass.
    pub tol: f64,
    pub kkt_tol: f64,
    pub max_iters: usize,
    /// `ε₀ = eps0_factor · Δx²`.
    pub eps0_factor: f64,
    /// `ε_min = eps_min_factor · Δx²`.
    pub eps_min_factor: f64,
    /// Tolerance used on the intermediate ε levels.
    pub tol_intermediate: f64,
    pub polish: bool,
    pub polish_max_cells: usize,
    /// Additional ε halvings below `ε_min` tried when the polish cannot certify.
    pub extra_halvings: usize,
    pub check_monotonicity: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            kkt_tol: 1e-6,
            max_iters: 100_000,
            eps0_factor: 0.1,
            eps_min_factor: 1e-3,
            tol_intermediate: 1e-5,
            polish: true,
            polish_max_cells: 64,
            extra_halvings: 8,
            check_monotonicity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceInfo {
    pub converged: bool,
    pub iterations: usize,
    pub marginal_residual: f64,
    pub dual_increment: f64,
    pub eps_final: f64,
    pub polished: bool,
    pub polish_repairs: usize,
    pub duality_gap: f64,
    pub max_dual_violation: f64,
    pub monotonicity_violations: usize,
    pub levels: Vec<scaling::LevelInfo>,
}

#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub tau: f64,
    pub n_cells: usize,
    /// Plan over nodes × nodes, row-major with `n_cells + 2` columns.
    pub gamma: Vec<f64>,
    /// Creation density per interior cell.
    pub h: Vec<f64>,
    /// Target density per interior cell (prescribed, or optimal in the JKO step).
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_star: Vec<f64>,
    pub kappa: f64,
    /// `C_τ(γ, h) = Σ c̃ γ + τ Σ e(h) Δx`.
    pub primal_value: f64,
    /// `C_τ(γ, h)` plus `E(ρ)` in the JKO step.
    pub objective: f64,
    pub dual_value: f64,
    pub mu: Vec<f64>,
    pub convergence: ConvergenceInfo,
    pub diagnostics: Option<DiagnosticsReport>,
    pub warnings: Vec<String>,
    pub state: DualState,
    pub jko: bool,
}

impl TransportSolution {
    pub fn n_nodes(&self) -> usize {
        self.n_cells + 2
    }

    #[inline]
    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.gamma[i * self.n_nodes() + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let nn = self.n_nodes();
        (0..nn).map(|i| self.gamma[i * nn..(i + 1) * nn].iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let nn = self.n_nodes();
        (0..nn).map(|j| (0..nn).map(|i| self.gamma[i * nn + j]).sum()).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn mass_floor(&self) -> f64 {
        MASS_FLOOR_REL * self.total_mass()
    }

    pub fn rho_density(&self, g: &Grid) -> Density {
        Density::from_density(g, &self.rho)
    }
}

fn floor_density(values: &[f64], what: &str, warnings: &mut Vec<String>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::NegativeDensity { cell: i, value: v });
        }
        if v < DENSITY_FLOOR {
            warnings.push(format!("{what} density in cell {i} raised from {v:e} to {DENSITY_FLOOR:e}"));
            out.push(DENSITY_FLOOR);
        } else {
            out.push(v);
        }
    }
    Ok(out)
}

/// Solves the transport problem with prescribed target `ρ`; returns the solution whose
/// `primal_value` is the transport cost between `μ` and `ρ`.
pub fn solve_fixed_target(
    g: &Grid,
    spec: &ModelSpec,
    tau: f64,
    mu: &Density,
    rho: &Density,
    opts: &SolverOptions,
) -> Result<TransportSolution> {
    solve_with_init(g, spec, tau, mu, Some(rho), opts, None)
}

/// One minimizing-movement step: minimizes `E(ρ) + Wb(μ, ρ)` jointly.
pub fn solve_jko_step(g: &Grid, spec: &ModelSpec, tau: f64, mu: &Density, opts: &SolverOptions) -> Result<(Density, TransportSolution)> {
    let sol = solve_with_init(g, spec, tau, mu, None, opts, None)?;
    Ok((sol.rho_density(g), sol))
}

/// Shared entry point; `rho = None` selects the JKO variant. `init` warm-starts the potentials.
pub fn solve_with_init(
    g: &Grid,
    spec: &ModelSpec,
    tau: f64,
    mu: &Density,
    rho: Option<&Density>,
    opts: &SolverOptions,
    init: Option<&DualState>,
) -> Result<TransportSolution> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let n = g.n_cells;
    if mu.len() != n || rho.is_some_and(|r| r.len() != n) {
        return Err(Error::InvalidArgument("density length differs from the number of cells".into()));
    }
    let mut warnings = Vec::new();
    let mu_rho = floor_density(&mu.density(g), "source", &mut warnings)?;
    let mu_mass: Vec<f64> = mu_rho.iter().map(|r| r * g.dx).collect();
    let target = match rho {
        Some(r) => Target::Fixed(floor_density(&r.density(g), "target", &mut warnings)?),
        None => Target::Free,
    };
    let jko = matches!(target, Target::Free);
    let cost = build_cost_matrix(g, spec, tau);
    let cols = Columns::new(g, spec, tau, target);
    let problem = ScalingProblem { cost: &cost, mu: mu_mass.clone(), cols };
    let dx2 = g.dx * g.dx;
    let schedule = ScalingSchedule {
        eps0: opts.eps0_factor * dx2,
        eps_min: opts.eps_min_factor * dx2,
        tol: opts.tol,
        tol_intermediate: opts.tol_intermediate,
        max_iters: opts.max_iters,
        check_monotonicity: opts.check_monotonicity,
    };
    let mut state = init.cloned().unwrap_or_else(|| DualState::zeros(n));
    let mut ws = scaling::Workspace::new(&problem);
    let total: f64 = mu_mass.iter().sum();
    let try_polish = opts.polish && n <= opts.polish_max_cells;
    let mut levels = Vec::new();
    let mut violations = 0;
    let mut iterations = 0;
    let mut eps = schedule.eps0.max(schedule.eps_min);
    let mut polished: Option<polish::PolishResult> = None;
    let mut extra = 0;
    loop {
        let at_min = eps <= schedule.eps_min * (1.0 + 1e-12);
        let tol = if at_min { schedule.tol } else { schedule.tol_intermediate.max(schedule.tol) };
        let budget = schedule.max_iters.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        let mut probe = |plan: &[f64]| {
            if try_polish && polished.is_none() {
                polished = polish::polish(&cost, &mu_mass, &problem.cols, plan, MASS_FLOOR_REL * total, 1e-9);
            }
            polished.is_some()
        };
        let info =
            ws.run_level_probed(&mut state, eps, tol, budget, schedule.check_monotonicity, &mut violations, &mut probe)?;
        iterations += info.iterations;
        levels.push(info);
        if polished.is_some() {
            break;
        }
        if try_polish {
            let plan = ws.plan(&state, eps);
            if let Some(p) = polish::polish(&cost, &mu_mass, &problem.cols, &plan, MASS_FLOOR_REL * total, 1e-9) {
                polished = Some(p);
                break;
            }
        }
        if at_min {
            if !try_polish || extra >= opts.extra_halvings {
                break;
            }
            extra += 1;
        }
        eps = if at_min { 0.5 * eps } else { (0.5 * eps).max(schedule.eps_min) };
    }
    if try_polish && polished.is_none() {
        warnings.push("exact polish could not certify an optimum; entropic plan returned".into());
    }
    let last_level = levels.last().cloned();
    let entropic_converged = last_level.as_ref().is_some_and(|l| l.converged && l.eps <= schedule.eps_min * (1.0 + 1e-12));
    let dual_increment = last_level.as_ref().map_or(f64::INFINITY, |l| l.dual_increment);

    let (gamma, final_state, max_dual_violation, repairs) = match &polished {
        Some(p) => (p.gamma.clone(), p.state.clone(), p.max_dual_violation, p.repairs),
        None => {
            let plan = ws.plan(&state, eps);
            let fs = state.clone();
            let viol = max_violation(&cost, &fs);
            (plan, fs, viol, 0)
        }
    };
    let cols = &problem.cols;
    let nn = g.n_nodes();
    let p: Vec<f64> = final_state.g.iter().map(|g| -g).collect();
    let h: Vec<f64> = (0..n).map(|j| cols.h(j, p[j])).collect();
    let rho_out: Vec<f64> = (0..n).map(|j| cols.density(j, p[j])).collect();

    let mut transport = 0.0;
    for i in 0..nn {
        for j in 0..nn {
            let gm = gamma[i * nn + j];
            if gm > 0.0 {
                transport += gm * cost.get(i, j);
            }
        }
    }
    let creation: f64 = (0..n).map(|j| tau * spec.e(h[j], g.cell_centers[j]) * g.dx).sum();
    let primal_value = transport + creation;
    let entropy: f64 = if jko {
        (0..n).map(|j| crate::model::entropy_density(rho_out[j], cols.v[j]) * g.dx).sum()
    } else {
        0.0
    };
    let objective = primal_value + entropy;
    let dual_value: f64 = (0..n).map(|i| mu_mass[i] * final_state.f[i]).sum::<f64>()
        + (0..n).map(|j| cols.dual(j, p[j])).sum::<f64>();

    let mut residual = 0.0f64;
    for i in 0..n {
        let s: f64 = gamma[i * nn..(i + 1) * nn].iter().sum();
        residual = residual.max((s - mu_mass[i]).abs());
    }
    for j in 0..n {
        let s: f64 = (0..nn).map(|i| gamma[i * nn + j]).sum();
        residual = residual.max((s - cols.mass(j, p[j])).abs());
    }
    let marginal_residual = residual / total;

    let mut phi = vec![0.0; nn];
    let mut phi_star = vec![0.0; nn];
    phi[..n].copy_from_slice(&final_state.f);
    phi_star[..n].copy_from_slice(&final_state.g);
    for side in crate::grid::Side::BOTH {
        let b = g.boundary_index(side);
        phi[b] = spec.psi.get(side);
        phi_star[b] = -spec.psi.get(side);
    }
    let col_mass: Vec<f64> = (0..n).map(|j| cols.mass(j, p[j])).collect();
    let kappa_terms: Vec<f64> = (0..n).map(|j| phi_star[j] + spec.e_prime(h[j], g.cell_centers[j])).collect();
    let kappa = potentials::weighted_median(&kappa_terms, &col_mass);

    let is_polished = polished.is_some();
    let converged = is_polished || (entropic_converged && marginal_residual <= opts.tol.max(1e-12));
    Ok(TransportSolution {
        tau,
        n_cells: n,
        gamma,
        h,
        rho: rho_out,
        phi,
        phi_star,
        kappa,
        primal_value,
        objective,
        dual_value,
        mu: mu_mass,
        convergence: ConvergenceInfo {
            converged,
            iterations,
            marginal_residual,
            dual_increment,
            eps_final: eps,
            polished: is_polished,
            polish_repairs: repairs,
            duality_gap: objective - dual_value,
            max_dual_violation,
            monotonicity_violations: violations,
            levels,
        },
        diagnostics: None,
        warnings,
        state: final_state,
        jko,
    })
}

fn max_violation(cost: &CostMatrix, s: &DualState) -> f64 {
    let n = s.f.len();
    let nn = cost.n_nodes;
    let mut worst = 0.0f64;
    for i in 0..nn {
        for j in 0..nn {
            if cost.is_forbidden(i, j) {
                continue;
            }
            let fi = if i < n { s.f[i] } else { 0.0 };
            let gj = if j < n { s.g[j] } else { 0.0 };
            worst = worst.max(fi + gj - cost.get(i, j));
        }
    }
    worst
}

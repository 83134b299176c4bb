//! Finite-difference reference solver for
//! `∂ₜρ = ∂ₓ(∂ₓρ + ρ ∂ₓV) − [e′ₓ]⁻¹(log ρ + V) + S` with `ρ = e^{Ψ−V}` on the
//! boundary, and weak-form utilities shared with JKO trajectories.
//!
//! Space: conservative fluxes on the cell-centred grid, central face averages
//! for the drift, Dirichlet values imposed at the boundary faces half a cell
//! from the first and last centres. Time: implicit Euler, each step solved by
//! damped Newton with a tridiagonal (Thomas) linear solve.
//!
//! The reaction term goes through [`ModelSpec::e_prime_inverse`], the same
//! definition used by the transport solver; the manufactured-solution helpers
//! provide an independent correctness anchor.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::flow::{step_count, Trajectory};
use crate::grid::{BoundaryValues, Grid, Side};
use crate::model::ModelSpec;

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX: usize = 60;
const POSITIVITY_FLOOR: f64 = 1e-12;
const MAX_HALVINGS: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct FDSolution {
    pub grid: Grid,
    pub times: Vec<f64>,
    /// `values[k][i] = ρ(t_k, x_i)`.
    pub values: Vec<Vec<f64>>,
    /// Dirichlet values `e^{Ψ−V}` at the two boundary nodes.
    pub boundary: BoundaryValues,
}

/// A sequence of density snapshots on a grid.
pub trait TimeSeries {
    fn grid(&self) -> &Grid;
    fn times(&self) -> Vec<f64>;
    fn density(&self, k: usize) -> Vec<f64>;
}

impl TimeSeries for FDSolution {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn times(&self) -> Vec<f64> {
        self.times.clone()
    }
    fn density(&self, k: usize) -> Vec<f64> {
        self.values[k].clone()
    }
}

/// A trajectory paired with its grid.
pub struct OnGrid<'a> {
    pub traj: &'a Trajectory,
    pub grid: &'a Grid,
}

impl TimeSeries for OnGrid<'_> {
    fn grid(&self) -> &Grid {
        self.grid
    }
    fn times(&self) -> Vec<f64> {
        self.traj.times()
    }
    fn density(&self, k: usize) -> Vec<f64> {
        self.traj.snapshots[k].rho.density(self.grid)
    }
}

pub fn dirichlet_values(spec: &ModelSpec, g: &Grid) -> BoundaryValues {
    let at = |side: Side| (spec.psi.get(side) - spec.v_at(g.boundary_point(side))).exp();
    BoundaryValues::new(at(Side::Lower), at(Side::Upper))
}

struct Stepper<'a> {
    g: &'a Grid,
    spec: &'a ModelSpec,
    rb: BoundaryValues,
    v: Vec<f64>,
    dv_face: Vec<f64>,
    forcing: &'a dyn Fn(f64, f64) -> f64,
}

impl Stepper<'_> {
    /// Residual `ρ − ρ_old + dt (∂ₓJ + R(ρ) − S)` and its tridiagonal Jacobian.
    fn residual(&self, rho: &[f64], old: &[f64], dt: f64, t_new: f64, jac: Option<&mut [Vec<f64>; 3]>) -> Vec<f64> {
        let n = rho.len();
        let dx = self.g.dx;
        let mut flux = vec![0.0; n + 1];
        let mut dflux_l = vec![0.0; n + 1];
        let mut dflux_r = vec![0.0; n + 1];
        flux[0] = -(rho[0] - self.rb.lower) / (0.5 * dx) - self.dv_face[0] * self.rb.lower;
        dflux_r[0] = -2.0 / dx;
        for f in 1..n {
            let w = self.dv_face[f];
            flux[f] = -(rho[f] - rho[f - 1]) / dx - w * 0.5 * (rho[f - 1] + rho[f]);
            dflux_l[f] = 1.0 / dx - 0.5 * w;
            dflux_r[f] = -1.0 / dx - 0.5 * w;
        }
        flux[n] = -(self.rb.upper - rho[n - 1]) / (0.5 * dx) - self.dv_face[n] * self.rb.upper;
        dflux_l[n] = 2.0 / dx;
        let mut out = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            let x = self.g.cell_centers[i];
            let p = rho[i].ln() + self.v[i];
            let r = self.spec.e_prime_inverse(p, x);
            let dr = self.spec.cost.e_prime_inverse_deriv(p, x) / rho[i];
            let s = (self.forcing)(t_new, x);
            out[i] = rho[i] - old[i] + dt * ((flux[i + 1] - flux[i]) / dx + r - s);
            diag[i] = 1.0 + dt * ((dflux_l[i + 1] - dflux_r[i]) / dx + dr);
            if i > 0 {
                lower[i] = -dt * dflux_l[i] / dx;
            }
            if i + 1 < n {
                upper[i] = dt * dflux_r[i + 1] / dx;
            }
        }
        if let Some(j) = jac {
            *j = [lower, diag, upper];
        }
        out
    }

    fn step(&self, old: &[f64], dt: f64, t_new: f64) -> Result<Vec<f64>> {
        let mut rho = old.to_vec();
        let mut jac: [Vec<f64>; 3] = [vec![], vec![], vec![]];
        let mut res = self.residual(&rho, old, dt, t_new, Some(&mut jac));
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut rn = norm(&res);
        for _ in 0..NEWTON_MAX {
            if rn <= NEWTON_TOL {
                return Ok(rho);
            }
            let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
            let delta = thomas(&jac[0], &jac[1], &jac[2], &rhs)?;
            let mut alpha = 1.0;
            loop {
                let trial: Vec<f64> = rho.iter().zip(&delta).map(|(r, d)| r + alpha * d).collect();
                if trial.iter().all(|&r| r >= POSITIVITY_FLOOR) {
                    let mut tj: [Vec<f64>; 3] = [vec![], vec![], vec![]];
                    let tr = self.residual(&trial, old, dt, t_new, Some(&mut tj));
                    let tn = norm(&tr);
                    if tn.is_finite() && (tn < (1.0 - 1e-4 * alpha) * rn || tn <= NEWTON_TOL) {
                        rho = trial;
                        res = tr;
                        rn = tn;
                        jac = tj;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-8 {
                    return Err(Error::Newton(format!("line search stalled at residual {rn:e}")));
                }
            }
        }
        if rn <= NEWTON_TOL {
            Ok(rho)
        } else {
            Err(Error::Newton(format!("no convergence in {NEWTON_MAX} iterations (residual {rn:e})")))
        }
    }

    /// One step of size `dt`, split into halves recursively on Newton failure.
    fn step_adaptive(&self, old: &[f64], dt: f64, t_new: f64, depth: u32) -> Result<Vec<f64>> {
        match self.step(old, dt, t_new) {
            Ok(r) => Ok(r),
            Err(e) if depth >= MAX_HALVINGS => Err(e),
            Err(_) => {
                let mid = self.step_adaptive(old, 0.5 * dt, t_new - 0.5 * dt, depth + 1)?;
                self.step_adaptive(&mid, 0.5 * dt, t_new, depth + 1)
            }
        }
    }
}

/// Solves a tridiagonal system (`lower[0]` and `upper[n−1]` are ignored).
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 {
        return Err(Error::Newton("singular tridiagonal system".into()));
    }
    c[0] = if n > 1 { upper[0] / piv } else { 0.0 };
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * c[i - 1];
        if piv == 0.0 {
            return Err(Error::Newton("singular tridiagonal system".into()));
        }
        c[i] = if i + 1 < n { upper[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

pub fn solve_fd(g: &Grid, spec: &ModelSpec, rho0: &[f64], t_final: f64, dt: f64) -> Result<FDSolution> {
    solve_fd_forced(g, spec, rho0, t_final, dt, &|_, _| 0.0)
}

/// As [`solve_fd`] with an additional source `S(t, x)` on the right-hand side.
pub fn solve_fd_forced(
    g: &Grid,
    spec: &ModelSpec,
    rho0: &[f64],
    t_final: f64,
    dt: f64,
    forcing: &dyn Fn(f64, f64) -> f64,
) -> Result<FDSolution> {
    if !(dt > 0.0 && t_final > 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_final > 0, got {dt}, {t_final}")));
    }
    if rho0.len() != g.n_cells {
        return Err(Error::InvalidArgument("initial density length differs from the number of cells".into()));
    }
    if let Some(i) = rho0.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::NegativeDensity { cell: i, value: rho0[i] });
    }
    let steps = step_count(dt, t_final).max(1);
    let dt = t_final / steps as f64;
    let mut faces = Vec::with_capacity(g.n_cells + 1);
    for f in 0..=g.n_cells {
        faces.push(spec.grad_v(g.x_lo + f as f64 * g.dx));
    }
    let stepper = Stepper {
        g,
        spec,
        rb: dirichlet_values(spec, g),
        v: g.cell_centers.iter().map(|&x| spec.v_at(x)).collect(),
        dv_face: faces,
        forcing,
    };
    let mut times = vec![0.0];
    let mut values = vec![rho0.to_vec()];
    for k in 1..=steps {
        let t = k as f64 * dt;
        let next = stepper.step_adaptive(values.last().expect("non-empty"), dt, t, 0)?;
        times.push(t);
        values.push(next);
    }
    Ok(FDSolution { grid: g.clone(), times, values, boundary: stepper.rb })
}

/// Compactly supported `C²` bump `(1 − ((x − c)/w)²)³` on `|x − c| < w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub center: f64,
    pub radius: f64,
}

impl TestFunction {
    pub fn value(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.radius;
        if s.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - s * s).powi(3)
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.radius;
        if s.abs() >= 1.0 {
            0.0
        } else {
            -6.0 * s * (1.0 - s * s).powi(2) / self.radius
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.radius;
        if s.abs() >= 1.0 {
            0.0
        } else {
            let u = 1.0 - s * s;
            (-6.0 * u * u + 24.0 * s * s * u) / (self.radius * self.radius)
        }
    }

    /// Support lies inside `Ω` minus the first and last cells.
    pub fn is_admissible(&self, g: &Grid) -> bool {
        self.radius > 0.0 && self.center - self.radius >= g.x_lo + g.dx && self.center + self.radius <= g.x_hi - g.dx
    }
}

fn pairing(g: &Grid, zeta: &TestFunction, rho: &[f64]) -> f64 {
    g.cell_centers.iter().zip(rho).map(|(&x, r)| zeta.value(x) * r * g.dx).sum()
}

fn weak_integrand(g: &Grid, spec: &ModelSpec, zeta: &TestFunction, rho: &[f64]) -> f64 {
    g.cell_centers
        .iter()
        .zip(rho)
        .map(|(&x, &r)| {
            let react = spec.e_prime_inverse(r.ln() + spec.v_at(x), x);
            ((zeta.d2(x) - spec.grad_v(x) * zeta.d1(x)) * r - zeta.value(x) * react) * g.dx
        })
        .sum()
}

/// Index of the snapshot representing time `t` under `ρ(t) = ρ_{[t/Δt]}`.
fn floor_index(times: &[f64], t: f64) -> usize {
    let scale = times.last().copied().unwrap_or(1.0).abs().max(1.0);
    times.iter().rposition(|&s| s <= t + 1e-12 * scale).unwrap_or(0)
}

/// `|∫ζρ(t₁) − ∫ζρ(t₀) − ∫_{t₀}^{t₁} (∫(ζ″ − V′ζ′)ρ − ∫ζ[e′]⁻¹(log ρ + V))|`.
/// On each interval `(t_k, t_{k+1}]` the time integral uses `ρ_{k+1}`.
pub fn weak_residual(series: &dyn TimeSeries, spec: &ModelSpec, zeta: &TestFunction, t0: f64, t1: f64) -> Result<f64> {
    let g = series.grid();
    if !zeta.is_admissible(g) {
        return Err(Error::InvalidArgument("test function must vanish on the first and last cells".into()));
    }
    let times = series.times();
    if !(t0 >= 0.0 && t1 > t0 && t1 <= times.last().copied().unwrap_or(0.0) * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!("invalid window [{t0}, {t1}]")));
    }
    let a = pairing(g, zeta, &series.density(floor_index(&times, t0)));
    let b = pairing(g, zeta, &series.density(floor_index(&times, t1)));
    let mut integral = 0.0;
    for k in 0..times.len() - 1 {
        let lo = times[k].max(t0);
        let hi = times[k + 1].min(t1);
        if hi > lo {
            integral += (hi - lo) * weak_integrand(g, spec, zeta, &series.density(k + 1));
        }
    }
    Ok((b - a - integral).abs())
}

/// Residual budget `C (√τ (t₁ − t₀) + τ ΔE)`.
pub fn residual_budget(c: f64, tau: f64, span: f64, energy_drop: f64) -> f64 {
    c * (tau.sqrt() * span + tau * energy_drop.abs())
}

/// Linear interpolation of an FD solution in time.
pub fn fd_at(sol: &FDSolution, t: f64) -> Vec<f64> {
    let k = floor_index(&sol.times, t);
    if k + 1 >= sol.times.len() {
        return sol.values[k].clone();
    }
    let (a, b) = (sol.times[k], sol.times[k + 1]);
    let w = ((t - a) / (b - a)).clamp(0.0, 1.0);
    sol.values[k].iter().zip(&sol.values[k + 1]).map(|(x, y)| (1.0 - w) * x + w * y).collect()
}

/// Cell averages of a fine-grid density over the cells of a coarser grid.
pub fn restrict(fine: &[f64], ratio: usize) -> Vec<f64> {
    fine.chunks(ratio).map(|c| c.iter().sum::<f64>() / ratio as f64).collect()
}

/// `L²(0, t_f; L²_loc)` distance between a JKO trajectory and an FD solution on a
/// refinement of its grid. Space: midpoint rule over coarse cells, dropping one
/// cell per side. Time: piecewise constant on the merged breakpoints, the
/// trajectory read as `ρ_{[t/τ]}` and the FD solution interpolated linearly.
pub fn compare_trajectories(a: &Trajectory, g: &Grid, b: &FDSolution, t_final: f64) -> Result<f64> {
    let fg = &b.grid;
    if (fg.x_lo - g.x_lo).abs() > 1e-12 || (fg.x_hi - g.x_hi).abs() > 1e-12 {
        return Err(Error::InvalidArgument("trajectories live on different intervals".into()));
    }
    if fg.n_cells % g.n_cells != 0 {
        return Err(Error::InvalidArgument("FD grid is not a refinement of the trajectory grid".into()));
    }
    let ratio = fg.n_cells / g.n_cells;
    let mut breaks: Vec<f64> = a.times().into_iter().chain(b.times.iter().copied()).filter(|&t| t <= t_final).collect();
    breaks.push(t_final);
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    let n = g.n_cells;
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let tm = 0.5 * (t0 + t1);
        let ra = a.snapshots[floor_index(&a.times(), tm)].rho.density(g);
        let rb = restrict(&fd_at(b, tm), ratio);
        let s: f64 = (1..n.saturating_sub(1)).map(|i| (ra[i] - rb[i]).powi(2) * g.dx).sum();
        total += (t1 - t0) * s;
    }
    Ok(total.sqrt())
}

/// The same distance between two series on one grid, both read as `ρ_{[t/Δt]}`.
pub fn series_distance(a: &dyn TimeSeries, b: &dyn TimeSeries, t_final: f64) -> Result<f64> {
    let g = a.grid();
    if g != b.grid() {
        return Err(Error::InvalidArgument("series live on different grids".into()));
    }
    let (ta, tb) = (a.times(), b.times());
    let mut breaks: Vec<f64> = ta.iter().chain(tb.iter()).copied().filter(|&t| t <= t_final).collect();
    breaks.push(t_final);
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    let n = g.n_cells;
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let tm = 0.5 * (w[0] + w[1]);
        let (ra, rb) = (a.density(floor_index(&ta, tm)), b.density(floor_index(&tb, tm)));
        let s: f64 = (1..n.saturating_sub(1)).map(|i| (ra[i] - rb[i]).powi(2) * g.dx).sum();
        total += (w[1] - w[0]) * s;
    }
    Ok(total.sqrt())
}

/// `ρ*(t, x) = 1 + 0.1 e^{−t} sin(πx)` on `(0, 1)`, exact for the linear relaxation
/// model under [`manufactured_forcing`].
pub fn manufactured_solution(t: f64, x: f64) -> f64 {
    1.0 + 0.1 * (-t).exp() * (PI * x).sin()
}

/// `S = ∂ₜρ* − ∂ₓₓρ* + (ρ* − 1) = 0.1 π² e^{−t} sin(πx)`.
pub fn manufactured_forcing(t: f64, x: f64) -> f64 {
    0.1 * PI * PI * (-t).exp() * (PI * x).sin()
}

/// Discrete `L²` error at `t_final` of the forced FD solution against `ρ*`.
pub fn manufactured_error(spec: &ModelSpec, g: &Grid, t_final: f64, dt: f64) -> Result<f64> {
    let rho0: Vec<f64> = g.cell_centers.iter().map(|&x| manufactured_solution(0.0, x)).collect();
    let sol = solve_fd_forced(g, spec, &rho0, t_final, dt, &manufactured_forcing)?;
    let last = sol.values.last().expect("non-empty");
    let t = *sol.times.last().expect("non-empty");
    let s: f64 = g.cell_centers.iter().zip(last).map(|(&x, r)| (r - manufactured_solution(t, x)).powi(2) * g.dx).sum();
    Ok(s.sqrt())
}

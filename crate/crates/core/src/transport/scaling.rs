//! Log-domain generalized scaling (Sinkhorn-type) iterations for the entropic
//! transport problem with free boundary marginals.
//!
//! Plan: `γ_ij = exp((f_i + g_j − c̃_ij)/ε)` with boundary potentials pinned to
//! zero in the `c̃` gauge. Interior rows match `μ_i` in closed form; interior
//! columns solve the scalar condition `log m_j(−g_j) = g_j/ε + log A_j`.

use crate::error::{Error, Result};
use crate::transport::columns::Columns;
use crate::transport::cost::CostMatrix;

/// Entries more than this far below the running maximum are dropped from log-sum-exp.
const LSE_CUTOFF: f64 = 46.0;

pub struct ScalingProblem<'a> {
    pub cost: &'a CostMatrix,
    /// Interior row masses `μ_i`.
    pub mu: Vec<f64>,
    pub cols: Columns<'a>,
}

/// Interior potentials in the `c̃` gauge (boundary potentials are zero).
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl DualState {
    pub fn zeros(n: usize) -> Self {
        DualState { f: vec![0.0; n], g: vec![0.0; n] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelInfo {
    pub eps: f64,
    pub iterations: usize,
    pub marginal_residual: f64,
    pub dual_increment: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ScalingOutcome {
    pub state: DualState,
    pub eps: f64,
    pub iterations: usize,
    pub marginal_residual: f64,
    pub dual_increment: f64,
    pub monotonicity_violations: usize,
    pub converged: bool,
    pub levels: Vec<LevelInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingSchedule {
    pub eps0: f64,
    pub eps_min: f64,
    pub tol: f64,
    pub tol_intermediate: f64,
    pub max_iters: usize,
    pub check_monotonicity: bool,
}

#[inline]
fn lse(args: &mut dyn Iterator<Item = f64>, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    let mut mx = f64::NEG_INFINITY;
    for a in args {
        if a > mx {
            mx = a;
        }
        buf.push(a);
    }
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    let mut s = 0.0;
    for &a in buf.iter() {
        let d = a - mx;
        if d > -LSE_CUTOFF {
            s += d.exp();
        }
    }
    mx + s.ln()
}

pub struct Workspace<'p, 'a> {
    pub problem: &'p ScalingProblem<'a>,
    n: usize,
    nn: usize,
    c: Vec<f64>,
    ct: Vec<f64>,
    buf: Vec<f64>,
}

impl<'p, 'a> Workspace<'p, 'a> {
    pub fn new(problem: &'p ScalingProblem<'a>) -> Self {
        let n = problem.mu.len();
        let nn = problem.cost.n_nodes;
        let c: Vec<f64> = (0..nn).flat_map(|i| problem.cost.row(i).to_vec()).collect();
        let ct = problem.cost.transpose_entries();
        Workspace { problem, n, nn, c, ct, buf: Vec::with_capacity(nn) }
    }

    #[inline]
    fn col_pot(&self, s: &DualState, j: usize) -> f64 {
        if j < self.n {
            s.g[j]
        } else {
            0.0
        }
    }

    #[inline]
    fn row_pot(&self, s: &DualState, i: usize) -> f64 {
        if i < self.n {
            s.f[i]
        } else {
            0.0
        }
    }

    /// Updates interior rows; returns (max |row sum − μ| before update, max |Δf|).
    fn row_update(&mut self, s: &mut DualState, eps: f64) -> (f64, f64) {
        let (mut res, mut inc) = (0.0f64, 0.0f64);
        let mut buf = std::mem::take(&mut self.buf);
        for i in 0..self.n {
            let row = &self.c[i * self.nn..(i + 1) * self.nn];
            let l = lse(&mut (0..self.nn).map(|j| (self.col_pot(s, j) - row[j]) / eps), &mut buf);
            let mu = self.problem.mu[i];
            let sum = (s.f[i] / eps + l).exp();
            res = res.max((sum - mu).abs());
            let f_new = eps * (mu.ln() - l);
            inc = inc.max((f_new - s.f[i]).abs());
            s.f[i] = f_new;
        }
        self.buf = buf;
        (res, inc)
    }

    /// Updates interior columns; returns max |Δg|.
    fn col_update(&mut self, s: &mut DualState, eps: f64) -> Result<f64> {
        let mut inc = 0.0f64;
        let mut buf = std::mem::take(&mut self.buf);
        for j in 0..self.n {
            let col = &self.ct[j * self.nn..(j + 1) * self.nn];
            let log_a = lse(&mut (0..self.nn).map(|i| (self.row_pot(s, i) - col[i]) / eps), &mut buf);
            let p = self.problem.cols.solve_scaling(j, log_a, eps, -s.g[j]).ok_or_else(|| {
                Error::Bracket(format!("column {j}: scaling condition has no root (log A = {log_a})"))
            })?;
            inc = inc.max((-p - s.g[j]).abs());
            s.g[j] = -p;
        }
        self.buf = buf;
        Ok(inc)
    }

    fn boundary_row_mass(&self, s: &DualState, eps: f64) -> f64 {
        let mut t = 0.0;
        for b in self.n..self.nn {
            for j in 0..self.n {
                t += ((s.g[j] - self.c[b * self.nn + j]) / eps).exp();
            }
        }
        t
    }

    fn boundary_col_mass(&self, s: &DualState, eps: f64) -> f64 {
        let mut t = 0.0;
        for b in self.n..self.nn {
            for i in 0..self.n {
                t += ((s.f[i] - self.ct[b * self.nn + i]) / eps).exp();
            }
        }
        t
    }

    fn dual_linear(&self, s: &DualState) -> (f64, f64) {
        let mut val = 0.0;
        let mut scale = 1.0;
        for i in 0..self.n {
            let t = self.problem.mu[i] * s.f[i];
            val += t;
            scale += t.abs();
        }
        for j in 0..self.n {
            let t = self.problem.cols.dual(j, -s.g[j]);
            val += t;
            scale += t.abs();
        }
        (val, scale)
    }

    /// Entropic dual value right after a row update (rows exactly matched).
    fn dual_after_rows(&self, s: &DualState, eps: f64) -> (f64, f64) {
        let (lin, scale) = self.dual_linear(s);
        let mass: f64 = self.problem.mu.iter().sum::<f64>() + self.boundary_row_mass(s, eps);
        (lin - eps * mass, scale + eps * mass)
    }

    /// Entropic dual value right after a column update (columns exactly matched).
    fn dual_after_cols(&self, s: &DualState, eps: f64) -> (f64, f64) {
        let (lin, scale) = self.dual_linear(s);
        let cols: f64 = (0..self.n).map(|j| self.problem.cols.mass(j, -s.g[j])).sum();
        let mass = cols + self.boundary_col_mass(s, eps);
        (lin - eps * mass, scale + eps * mass)
    }

    /// Entropic plan for the current potentials.
    pub fn plan(&self, s: &DualState, eps: f64) -> Vec<f64> {
        let mut gamma = vec![0.0; self.nn * self.nn];
        for i in 0..self.nn {
            for j in 0..self.nn {
                let c = self.c[i * self.nn + j];
                if c.is_finite() {
                    gamma[i * self.nn + j] = ((self.row_pot(s, i) + self.col_pot(s, j) - c) / eps).exp();
                }
            }
        }
        gamma
    }

    /// Runs block updates at fixed `ε` until the row residual (relative to total
    /// mass) and the dual increment fall below `tol`, or `max_iters` is reached.
    pub fn run_level(
        &mut self,
        s: &mut DualState,
        eps: f64,
        tol: f64,
        max_iters: usize,
        check_monotonicity: bool,
        violations: &mut usize,
    ) -> Result<LevelInfo> {
        self.run_level_probed(s, eps, tol, max_iters, check_monotonicity, violations, &mut |_: &[f64]| false)
    }

    /// As [`Workspace::run_level`], additionally handing the current plan to `probe`
    /// after 16, 32, 64, … iterations; the level stops early when it returns `true`.
    #[allow(clippy::too_many_arguments)]
    pub fn run_level_probed(
        &mut self,
        s: &mut DualState,
        eps: f64,
        tol: f64,
        max_iters: usize,
        check_monotonicity: bool,
        violations: &mut usize,
        probe: &mut dyn FnMut(&[f64]) -> bool,
    ) -> Result<LevelInfo> {
        let mut next_probe = 16;
        let total: f64 = self.problem.mu.iter().sum();
        let mut last = f64::NEG_INFINITY;
        let (mut res, mut inc) = (f64::INFINITY, f64::INFINITY);
        let mut it = 0;
        let monotone = |d: (f64, f64), last: &mut f64, v: &mut usize| {
            if d.0 < *last - 1e-12 * d.1 {
                *v += 1;
            }
            *last = d.0;
        };
        while it < max_iters {
            it += 1;
            let (r, fi) = self.row_update(s, eps);
            if check_monotonicity {
                monotone(self.dual_after_rows(s, eps), &mut last, violations);
            }
            let gi = self.col_update(s, eps)?;
            if check_monotonicity {
                monotone(self.dual_after_cols(s, eps), &mut last, violations);
            }
            res = r / total;
            inc = fi.max(gi);
            if res <= tol && inc <= tol {
                break;
            }
            if it == next_probe {
                next_probe *= 2;
                if probe(&self.plan(s, eps)) {
                    return Ok(LevelInfo { eps, iterations: it, marginal_residual: res, dual_increment: inc, converged: false });
                }
            }
        }
        Ok(LevelInfo { eps, iterations: it, marginal_residual: res, dual_increment: inc, converged: res <= tol && inc <= tol })
    }
}

/// ε-continuation from `eps0` by halving down to `eps_min`.
pub fn generalized_scaling_solve(
    problem: &ScalingProblem<'_>,
    schedule: &ScalingSchedule,
    init: Option<&DualState>,
) -> Result<ScalingOutcome> {
    let n = problem.mu.len();
    let mut state = init.cloned().unwrap_or_else(|| DualState::zeros(n));
    let mut ws = Workspace::new(problem);
    let mut levels = Vec::new();
    let mut violations = 0;
    let mut eps = schedule.eps0.max(schedule.eps_min);
    let mut used = 0;
    loop {
        let last_level = eps <= schedule.eps_min * (1.0 + 1e-12);
        let tol = if last_level { schedule.tol } else { schedule.tol_intermediate.max(schedule.tol) };
        let budget = schedule.max_iters.saturating_sub(used);
        if budget == 0 {
            break;
        }
        let info = ws.run_level(&mut state, eps, tol, budget, schedule.check_monotonicity, &mut violations)?;
        used += info.iterations;
        levels.push(info);
        if last_level {
            break;
        }
        eps = (0.5 * eps).max(schedule.eps_min);
    }
    let last = levels.last().cloned().unwrap_or(LevelInfo {
        eps,
        iterations: 0,
        marginal_residual: f64::INFINITY,
        dual_increment: f64::INFINITY,
        converged: false,
    });
    Ok(ScalingOutcome {
        state,
        eps: last.eps,
        iterations: used,
        marginal_residual: last.marginal_residual,
        dual_increment: last.dual_increment,
        monotonicity_violations: violations,
        converged: last.converged && last.eps <= schedule.eps_min * (1.0 + 1e-12),
        levels,
    })
}

//! Brute-force reference optimum for very small grids.
//!
//! At fixed column masses the transport part is a linear program whose value is
//! `max_v v·(μ, m)` over the vertices `v` of the dual polyhedron
//! `{(f, g) : f_i + g_j ≤ c̃_ij}` (boundary potentials zero). The vertices are
//! enumerated once by solving every square subsystem of active constraints.
//! The column masses are parametrized per cell by `p = e′(h)`; the outer
//! problem is a nested grid search over `p` in the window `m_r ≤ h ≤ m_R + 1`.
//! In the JKO variant `ρ_j = e^{p − V_j}` eliminates the density. Points with a
//! negative column mass are infeasible (the inner program is unbounded there).

use crate::error::{Error, Result};
use crate::grid::{Grid, Side};
use crate::model::cost::QUAD_TOL;
use crate::model::{entropy_density, ModelSpec};
use crate::transport::diagnostics::window_radii;
use crate::transport::Density;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    /// Points per cell on the first pass.
    pub grid_points: usize,
    /// Points per cell on each zoom pass.
    pub refine_points: usize,
    /// Zoom half-width in units of the previous spacing.
    pub refine_halfwidth: f64,
    /// Stop once the spacing in `p` falls below this.
    pub p_tol: f64,
    pub max_passes: usize,
    pub max_nodes: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { grid_points: 50, refine_points: 41, refine_halfwidth: 8.0, p_tol: 1e-11, max_passes: 80, max_nodes: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub h: Vec<f64>,
    pub rho: Vec<f64>,
    pub p: Vec<f64>,
    /// Dual vertex attaining the inner linear program at the optimum.
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// Uncertainty of `h`: one final grid spacing, or the radius of the set on which
    /// the strongly convex objective stays within its evaluation error of the optimum.
    pub h_resolution: f64,
    pub vertices: usize,
    pub evaluations: usize,
    pub passes: usize,
}

fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, d: usize) -> Option<Vec<f64>> {
    for k in 0..d {
        let piv = (k..d).max_by(|&x, &y| a[x * d + k].abs().partial_cmp(&a[y * d + k].abs()).unwrap())?;
        if a[piv * d + k].abs() < 1e-12 {
            return None;
        }
        if piv != k {
            for c in 0..d {
                a.swap(k * d + c, piv * d + c);
            }
            b.swap(k, piv);
        }
        for r in k + 1..d {
            let m = a[r * d + k] / a[k * d + k];
            if m != 0.0 {
                for c in k..d {
                    a[r * d + c] -= m * a[k * d + c];
                }
                b[r] -= m * b[k];
            }
        }
    }
    let mut x = vec![0.0; d];
    for k in (0..d).rev() {
        let s: f64 = (k + 1..d).map(|c| a[k * d + c] * x[c]).sum();
        x[k] = (b[k] - s) / a[k * d + k];
    }
    Some(x)
}

/// `(cost, mass, h, ρ)` of one column.
type ColumnData = (f64, f64, f64, f64);

struct Constraint {
    row: Option<usize>,
    col: Option<usize>,
    c: f64,
}

fn dual_vertices(cons: &[Constraint], n: usize) -> Vec<Vec<f64>> {
    let d = 2 * n;
    let m = cons.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    if m < d {
        return out;
    }
    loop {
        let mut a = vec![0.0; d * d];
        let mut b = vec![0.0; d];
        for (r, &k) in idx.iter().enumerate() {
            if let Some(i) = cons[k].row {
                a[r * d + i] = 1.0;
            }
            if let Some(j) = cons[k].col {
                a[r * d + n + j] = 1.0;
            }
            b[r] = cons[k].c;
        }
        if let Some(y) = solve_dense(a, b, d) {
            let feasible = cons.iter().all(|k| {
                let s = k.row.map_or(0.0, |i| y[i]) + k.col.map_or(0.0, |j| y[n + j]);
                s <= k.c + 1e-9 * (1.0 + k.c.abs())
            });
            if feasible && !out.iter().any(|v| v.iter().zip(&y).all(|(a, b)| (a - b).abs() <= 1e-10 * (1.0 + a.abs()))) {
                out.push(y);
            }
        }
        let mut k = d;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] < m - d + k {
                break;
            }
        }
        idx[k] += 1;
        for t in k + 1..d {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

/// Reference optimum on grids with at most `opts.max_nodes` nodes. `rho = None`
/// selects the JKO variant.
pub fn brute_force_small(
    g: &Grid,
    spec: &ModelSpec,
    tau: f64,
    mu: &Density,
    rho: Option<&Density>,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    let n = g.n_cells;
    let nn = n + 2;
    if nn > opts.max_nodes {
        return Err(Error::NodeBudget { nodes: nn, max: opts.max_nodes });
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let pos = |k: usize| if k < n { g.cell_centers[k] } else if k == n { g.x_lo } else { g.x_hi };
    let psi = |k: usize| if k == n { spec.psi.get(Side::Lower) } else { spec.psi.get(Side::Upper) };
    let mut cons = Vec::new();
    for i in 0..nn {
        for j in 0..nn {
            if i >= n && j >= n {
                continue;
            }
            let mut c = (pos(i) - pos(j)).powi(2) / (2.0 * tau);
            if j >= n {
                c += psi(j);
            }
            if i >= n {
                c -= psi(i);
            }
            cons.push(Constraint { row: (i < n).then_some(i), col: (j < n).then_some(j), c });
        }
    }
    let verts = dual_vertices(&cons, n);
    if verts.is_empty() {
        return Err(Error::InvalidArgument("dual polyhedron has no vertices".into()));
    }
    let dx = g.dx;
    let x: Vec<f64> = g.cell_centers.clone();
    let v: Vec<f64> = x.iter().map(|&x| spec.v_at(x)).collect();
    let target: Option<Vec<f64>> = rho.map(|r| r.density(g));
    let mu_m = mu.cell_mass.clone();

    // Per-cell cost and column mass at multiplier p.
    let column = |j: usize, p: f64| -> Option<ColumnData> {
        let h = spec.e_prime_inverse(p, x[j]);
        let e = spec.e(h, x[j]);
        if !e.is_finite() {
            return None;
        }
        match &target {
            Some(t) => {
                let m = dx * (t[j] + tau * h);
                (m >= 0.0).then_some((tau * e * dx, m, h, t[j]))
            }
            None => {
                let r = (p - v[j]).exp();
                let m = dx * (r + tau * h);
                (m >= 0.0).then_some((tau * e * dx + entropy_density(r, v[j]) * dx, m, h, r))
            }
        }
    };
    // Objective from per-cell column data; returns (value, vertex, round-off scale).
    let eval = |cols: &[ColumnData]| -> (f64, usize, f64) {
        let mut b = mu_m.clone();
        let mut cost = 0.0;
        let mut scale = 0.0;
        for c in cols {
            cost += c.0;
            scale += c.0.abs();
            b.push(c.1);
        }
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, y) in verts.iter().enumerate() {
            let s: f64 = y.iter().zip(&b).map(|(a, b)| a * b).sum();
            if s > best.0 {
                best = (s, k);
            }
        }
        let lp_scale: f64 = verts[best.1].iter().zip(&b).map(|(a, b)| (a * b).abs()).sum();
        (best.0 + cost, best.1, scale + lp_scale)
    };
    let eval_p = |p: &[f64]| -> Option<(f64, usize, f64)> {
        let cols: Option<Vec<_>> = p.iter().enumerate().map(|(j, &pj)| column(j, pj)).collect();
        cols.map(|c| eval(&c))
    };

    let (r, big_r) = window_radii(g, spec, tau);
    let mut lo = vec![r; n];
    let mut hi = vec![0.0; n];
    for j in 0..n {
        hi[j] = spec.e_prime(spec.e_prime_inverse(big_r, x[j]) + 1.0, x[j]);
        if let Some(t) = &target {
            let z = -t[j] / tau;
            if z > spec.domain_lower(x[j]) {
                lo[j] = lo[j].max(spec.e_prime(z, x[j]));
            }
        }
        if lo[j] >= hi[j] {
            return Err(Error::InvalidArgument(format!("empty search window in cell {j}")));
        }
    }

    let (lo0, hi0) = (lo.clone(), hi.clone());
    let mut evaluations = 0;
    let mut best_p: Vec<f64> = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_vertex = 0;
    let mut spacing = vec![0.0; n];
    let mut passes = 0;
    let mut points = opts.grid_points.max(2);
    while passes < opts.max_passes {
        passes += 1;
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..points).map(|k| lo[j] + (hi[j] - lo[j]) * k as f64 / (points - 1) as f64).collect())
            .collect();
        for j in 0..n {
            spacing[j] = (hi[j] - lo[j]) / (points - 1) as f64;
        }
        let table: Vec<Vec<Option<ColumnData>>> =
            axes.iter().enumerate().map(|(j, ax)| ax.iter().map(|&p| column(j, p)).collect()).collect();
        let mut counter = vec![0usize; n];
        let mut cols = Vec::with_capacity(n);
        loop {
            cols.clear();
            for j in 0..n {
                match table[j][counter[j]] {
                    Some(c) => cols.push(c),
                    None => break,
                }
            }
            if cols.len() == n {
                let (val, vk, _) = eval(&cols);
                evaluations += 1;
                if val < best_val {
                    best_val = val;
                    best_p = (0..n).map(|j| axes[j][counter[j]]).collect();
                    best_vertex = vk;
                }
            }
            let mut k = 0;
            while k < n {
                counter[k] += 1;
                if counter[k] < points {
                    break;
                }
                counter[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
        if best_p.is_empty() {
            return Err(Error::InvalidArgument("no feasible point in the search window".into()));
        }
        if spacing.iter().all(|&s| s < opts.p_tol) {
            break;
        }
        points = opts.refine_points.max(3);
        for j in 0..n {
            let w = opts.refine_halfwidth * spacing[j];
            lo[j] = (best_p[j] - w).max(lo0[j]);
            hi[j] = (best_p[j] + w).min(hi0[j]);
        }
    }
    // Resolution: one grid spacing mapped to `h`, or the strong-convexity radius
    // `√(2δ/κ)` with `κ = τ Δx min e″` and `δ` the round-off/quadrature level of
    // the objective, whichever is larger.
    let (_, _, scale) = eval_p(&best_p).expect("optimum is feasible");
    let noise = 64.0 * f64::EPSILON * (1.0 + scale) + tau * dx * n as f64 * QUAD_TOL;
    let mut h = Vec::with_capacity(n);
    let mut rho_out = Vec::with_capacity(n);
    let mut h_resolution = 0.0f64;
    let mut kappa = f64::INFINITY;
    for j in 0..n {
        let (_, _, hj, rj) = column(j, best_p[j]).expect("optimum is feasible");
        h.push(hj);
        rho_out.push(rj);
        let a = spec.e_prime_inverse(best_p[j] - spacing[j], x[j]);
        let b = spec.e_prime_inverse(best_p[j] + spacing[j], x[j]);
        h_resolution = h_resolution.max((b - a).abs());
        kappa = kappa.min(tau * dx / spec.cost.e_prime_inverse_deriv(best_p[j], x[j]));
    }
    if kappa > 0.0 && kappa.is_finite() {
        h_resolution = h_resolution.max((2.0 * noise / kappa).sqrt());
    }
    let y = &verts[best_vertex];
    Ok(OracleResult {
        value: best_val,
        h,
        rho: rho_out,
        p: best_p,
        f: y[..n].to_vec(),
        g: y[n..].to_vec(),
        h_resolution,
        vertices: verts.len(),
        evaluations,
        passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve() {
        let x = solve_dense(vec![2.0, 1.0, 1.0, 3.0], vec![3.0, 5.0], 2).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(solve_dense(vec![1.0, 1.0, 1.0, 1.0], vec![1.0, 2.0], 2).is_none());
    }
}

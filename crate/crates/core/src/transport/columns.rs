//! Interior column marginals as functions of the column multiplier `p = −φ*_j`.
//!
//! At optimality `e′(h_j) = p`, so `h_j = [e′]⁻¹(p)`. For a fixed target the
//! column mass is `Δx (ρ_j + τ h_j)`; in the JKO step the density is eliminated
//! through `log ρ_j + V_j = p`, giving `Δx (e^{p−V_j} + τ h_j)`.

use crate::grid::Grid;
use crate::model::ModelSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Prescribed target densities `ρ_j`.
    Fixed(Vec<f64>),
    /// Target density is optimized jointly with the plan (JKO step).
    Free,
}

#[derive(Debug, Clone)]
pub struct Columns<'a> {
    pub spec: &'a ModelSpec,
    pub tau: f64,
    pub dx: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub target: Target,
}

impl<'a> Columns<'a> {
    pub fn new(g: &Grid, spec: &'a ModelSpec, tau: f64, target: Target) -> Self {
        let x = g.cell_centers.clone();
        let v = x.iter().map(|&x| spec.v_at(x)).collect();
        Columns { spec, tau, dx: g.dx, x, v, target }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    #[inline]
    pub fn h(&self, j: usize, p: f64) -> f64 {
        self.spec.e_prime_inverse(p, self.x[j])
    }

    #[inline]
    pub fn density(&self, j: usize, p: f64) -> f64 {
        match &self.target {
            Target::Fixed(rho) => rho[j],
            Target::Free => (p - self.v[j]).exp(),
        }
    }

    /// Column mass `m_j(p)`; increasing in `p`, possibly negative.
    #[inline]
    pub fn mass(&self, j: usize, p: f64) -> f64 {
        self.dx * (self.density(j, p) + self.tau * self.h(j, p))
    }

    #[inline]
    pub fn mass_deriv(&self, j: usize, p: f64) -> f64 {
        let dh = self.spec.cost.e_prime_inverse_deriv(p, self.x[j]);
        let drho = match &self.target {
            Target::Fixed(_) => 0.0,
            Target::Free => (p - self.v[j]).exp(),
        };
        self.dx * (drho + self.tau * dh)
    }

    /// Concave dual contribution `min_m f_j(m) − p m` of column `j`.
    pub fn dual(&self, j: usize, p: f64) -> f64 {
        let es = self.spec.cost.e_star(p, self.x[j]);
        match &self.target {
            Target::Fixed(rho) => self.dx * (-rho[j] * p - self.tau * es),
            Target::Free => self.dx * (-self.tau * es - ((p - self.v[j]).exp() - 1.0)),
        }
    }

    /// Primal column cost `τ e(h) Δx` (plus `𝓔(ρ) Δx` for the JKO step) at multiplier `p`.
    pub fn primal(&self, j: usize, p: f64) -> f64 {
        let h = self.h(j, p);
        let mut val = self.tau * self.spec.e(h, self.x[j]) * self.dx;
        if let Target::Free = self.target {
            val += crate::model::entropy_density(self.density(j, p), self.v[j]) * self.dx;
        }
        val
    }

    /// Solves `log m_j(p) + p/ε = log_a` for `p` (left side increasing), starting near `p0`.
    pub fn solve_scaling(&self, j: usize, log_a: f64, eps: f64, p0: f64) -> Option<f64> {
        let f = |p: f64| {
            let m = self.mass(j, p);
            if m > 0.0 {
                (m.ln() + p / eps - log_a, self.mass_deriv(j, p) / m + 1.0 / eps)
            } else {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
        };
        solve_increasing(f, p0, eps)
    }

    /// Solves `Σ_j m_j(t − g0_j) = target` over the listed columns for `t`.
    pub fn solve_gauge(&self, cols: &[(usize, f64)], target: f64) -> Option<f64> {
        let f = |t: f64| {
            let (mut s, mut d) = (0.0, 0.0);
            for &(j, g0) in cols {
                s += self.mass(j, t - g0);
                d += self.mass_deriv(j, t - g0);
            }
            (s - target, d)
        };
        let t0 = cols.iter().map(|&(_, g0)| g0).sum::<f64>() / cols.len().max(1) as f64;
        solve_increasing(f, t0, 1.0)
    }
}

/// Root of an increasing function given as `p ↦ (value, derivative)`; `value = −∞`
/// marks points left of the domain. Bracket growth followed by safeguarded Newton.
pub fn solve_increasing<F: Fn(f64) -> (f64, f64)>(f: F, p0: f64, scale: f64) -> Option<f64> {
    let (v0, _) = f(p0);
    if v0 == 0.0 {
        return Some(p0);
    }
    let mut step = scale.max(1e-12 * (1.0 + p0.abs()));
    let (mut lo, mut hi);
    if v0 > 0.0 {
        hi = p0;
        lo = p0 - step;
        loop {
            let (v, _) = f(lo);
            if v.is_nan() {
                return None;
            }
            if v <= 0.0 {
                break;
            }
            hi = lo;
            step *= 2.0;
            lo -= step;
            if !lo.is_finite() || step > 1e12 {
                return None;
            }
        }
    } else {
        lo = p0;
        hi = p0 + step;
        loop {
            let (v, _) = f(hi);
            if v.is_nan() {
                return None;
            }
            if v >= 0.0 {
                break;
            }
            lo = hi;
            step *= 2.0;
            hi += step;
            if !hi.is_finite() || step > 1e12 {
                return None;
            }
        }
    }
    let mut p = if v0 > 0.0 { hi } else { lo };
    for _ in 0..400 {
        let (v, d) = f(p);
        if v == 0.0 {
            return Some(p);
        }
        if v > 0.0 {
            hi = p;
        } else {
            lo = p;
        }
        let mut next = if v.is_finite() && d.is_finite() && d > 0.0 { p - v / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo) <= 4.0 * f64::EPSILON * (1.0 + p.abs()) || (next - p).abs() <= f64::EPSILON * (1.0 + p.abs()) {
            return Some(next);
        }
        p = next;
    }
    Some(p)
}

//! The cost integrand `e(z, x)` built from a reaction `F` and drift `V`:
//!
//! `e(z,x) = ∫_{[F′]⁻¹(0)}^{[F′]⁻¹(z)} (log r + V(x)) F″(r) dr`,
//! `e′(z,x) = log [F′]⁻¹(z) + V(x)`, `[e′]⁻¹(p) = F′(e^{p−V(x)})`.
//!
//! Power and logarithmic presets use closed forms. The signed-power preset is
//! integrated by parts, `e = (z − m) log r + V z + m log r₀ − ∫_{r₀}^{r} (F′(u) − m)/u du`
//! with `m = inf F′`, leaving a continuous integrand for the quadrature. Custom
//! reactions integrate `e′` along `z`.
//!
//! Values below `a(x) = inf F′_x` are `f64::INFINITY`, returned explicitly.

use crate::error::{Error, Result};
use crate::model::quadrature::integrate;
use crate::model::reaction::{invert_numeric, Coef, ReactionSpec};

pub const QUAD_TOL: f64 = 1e-10;
const INVERT_TOL: f64 = 1e-12;
/// Lower cut-off used when integrating `(F′(u) − m)/u` from `u = 0` for custom reactions.
pub const LIMINF_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct CostIntegrand {
    pub reaction: ReactionSpec,
    pub v: Coef,
}

/// Builds `e` from a reaction and checks that `F′_x` crosses zero on a set of probe points.
pub fn build_e_from_reaction(reaction: ReactionSpec, v: Coef, probes: &[f64]) -> Result<CostIntegrand> {
    let e = CostIntegrand { reaction, v };
    for &x in probes {
        let inf = e.reaction.inf_f_prime(x);
        if !(inf < 0.0) {
            return Err(Error::NoZeroCrossing { x });
        }
        if e.r_of(0.0, x).is_none() {
            return Err(Error::NoZeroCrossing { x });
        }
    }
    Ok(e)
}

impl CostIntegrand {
    /// Lower endpoint `a(x)` of the domain of `e_x`.
    pub fn domain_lower(&self, x: f64) -> f64 {
        self.reaction.inf_f_prime(x)
    }

    /// `[F′_x]⁻¹(z)`, `None` when `z ≤ a(x)` or the inversion fails.
    pub fn r_of(&self, z: f64, x: f64) -> Option<f64> {
        if !(z > self.domain_lower(x)) {
            return None;
        }
        match self.reaction.f_prime_inverse(z, x) {
            Some(r) => Some(r),
            None => invert_numeric(&self.reaction, z, x, INVERT_TOL).ok(),
        }
    }

    pub fn e(&self, z: f64, x: f64) -> f64 {
        let a = self.domain_lower(x);
        if z < a || z.is_nan() {
            return f64::INFINITY;
        }
        if z == a {
            return self.e_at_lower(x);
        }
        let v = self.v.at(x);
        match &self.reaction {
            ReactionSpec::Power { w, beta, q } => {
                let (w, b, q) = (w.at(x), beta.at(x), q.at(x));
                let zq = z + q;
                let ln_r = (zq / w).ln() / (1.0 + b);
                let ln_r0 = (q / w).ln() / (1.0 + b);
                zq * (ln_r - 1.0 / (1.0 + b)) + v * z + q / (1.0 + b) - q * ln_r0
            }
            ReactionSpec::Log { w, q } => {
                let (w, q) = (w.at(x), q.at(x));
                z * z / (2.0 * w) + z * (q / w + v)
            }
            ReactionSpec::SignedPower { .. } => self.e_by_parts(z, x),
            ReactionSpec::Custom(_) => self.e_quadrature(z, x),
        }
    }

    /// Quadrature of `e′` from `0` to `z`. Substituting `r = [F′_x]⁻¹(s)` turns the
    /// defining integral into this form, whose integrand has at most a logarithmic
    /// singularity at `a(x)`.
    pub fn e_quadrature(&self, z: f64, x: f64) -> f64 {
        let a = self.domain_lower(x);
        if !(z > a) {
            return if z == a { self.e_at_lower(x) } else { f64::INFINITY };
        }
        integrate(|s: f64| self.e_prime(s, x), 0.0, z, QUAD_TOL)
    }

    fn e_by_parts(&self, z: f64, x: f64) -> f64 {
        let m = self.domain_lower(x);
        let (Some(r), Some(r0)) = (self.r_of(z, x), self.r_of(0.0, x)) else {
            return f64::INFINITY;
        };
        let g = |u: f64| (self.reaction.f_prime(u, x) - m) / u;
        (z - m) * r.ln() + self.v.at(x) * z + m * r0.ln() - split_at_one(g, r0, r)
    }

    /// Limit of `e_x(z)` as `z ↓ a(x)` (finite `a` only).
    pub fn e_at_lower(&self, x: f64) -> f64 {
        let m = self.domain_lower(x);
        if !m.is_finite() {
            return f64::INFINITY;
        }
        let v = self.v.at(x);
        let Some(r0) = self.r_of(0.0, x) else { return f64::INFINITY };
        match &self.reaction {
            ReactionSpec::Power { beta, q, .. } => {
                let (b, q) = (beta.at(x), q.at(x));
                -v * q + q / (1.0 + b) - q * r0.ln()
            }
            _ => {
                let g = |u: f64| (self.reaction.f_prime(u, x) - m) / u;
                v * m + m * r0.ln() + split_at_one(g, LIMINF_CUTOFF * r0, r0)
            }
        }
    }

    /// `e′_x(z) = log [F′_x]⁻¹(z) + V(x)`; `−∞` at or below `a(x)`.
    pub fn e_prime(&self, z: f64, x: f64) -> f64 {
        match self.r_of(z, x) {
            Some(r) => r.ln() + self.v.at(x),
            None => f64::NEG_INFINITY,
        }
    }

    /// `[e′_x]⁻¹(p) = F′_x(e^{p − V(x)})`.
    pub fn e_prime_inverse(&self, p: f64, x: f64) -> f64 {
        self.reaction.f_prime((p - self.v.at(x)).exp(), x)
    }

    /// `d/dp [e′_x]⁻¹(p) = F″(r)·r` with `r = e^{p−V}`.
    pub fn e_prime_inverse_deriv(&self, p: f64, x: f64) -> f64 {
        let r = (p - self.v.at(x)).exp();
        self.reaction.f_double_prime(r, x) * r
    }

    /// Convex conjugate `e*_x(p) = sup_z (p z − e_x(z))`.
    pub fn e_star(&self, p: f64, x: f64) -> f64 {
        let v = self.v.at(x);
        match &self.reaction {
            ReactionSpec::Power { w, beta, q } => {
                let (w, b, q) = (w.at(x), beta.at(x), q.at(x));
                let ln_r = p - v;
                let ln_r0 = (q / w).ln() / (1.0 + b);
                (w * ((1.0 + b) * ln_r).exp() - q) / (1.0 + b) - q * (ln_r - ln_r0)
            }
            ReactionSpec::Log { w, q } => {
                let (w, q) = (w.at(x), q.at(x));
                let d = w * (p - v) - q;
                d * d / (2.0 * w)
            }
            _ => {
                let h = self.e_prime_inverse(p, x);
                p * h - self.e(h, x)
            }
        }
    }
}

fn split_at_one<G: Fn(f64) -> f64>(g: G, a: f64, b: f64) -> f64 {
    if (a - 1.0) * (b - 1.0) < 0.0 {
        integrate(&g, a, 1.0, QUAD_TOL) + integrate(&g, 1.0, b, QUAD_TOL)
    } else {
        integrate(&g, a, b, QUAD_TOL)
    }
}

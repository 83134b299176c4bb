//! Sampling audit of the structural assumptions on the reaction, the cost
//! integrand and the boundary data. Failures annotate the report and never abort.

use crate::grid::Grid;
use crate::model::ModelSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditCheck {
    pub id: String,
    pub pass: bool,
    /// Worst sample found, as `(x, argument, offending value)`.
    pub worst: (f64, f64, f64),
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionAudit {
    pub c0: f64,
    pub s: f64,
    pub s1: f64,
    pub b0: f64,
    pub lip_v: f64,
    pub lip_psi: f64,
    pub lip_rho_d: f64,
    pub checks: Vec<AuditCheck>,
}

impl AssumptionAudit {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, id: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

struct Tracker {
    id: &'static str,
    note: &'static str,
    pass: bool,
    worst: (f64, f64, f64),
    worst_score: f64,
}

impl Tracker {
    fn new(id: &'static str, note: &'static str) -> Self {
        Self { id, note, pass: true, worst: (f64::NAN, f64::NAN, f64::NAN), worst_score: f64::NEG_INFINITY }
    }

    /// Records a sample; `score` is larger when worse and `ok` says whether it passes.
    fn record(&mut self, ok: bool, score: f64, sample: (f64, f64, f64)) {
        if !ok {
            self.pass = false;
        }
        let score = if score.is_nan() { f64::INFINITY } else { score };
        if score > self.worst_score {
            self.worst_score = score;
            self.worst = sample;
        }
    }

    fn finish(self) -> AuditCheck {
        AuditCheck { id: self.id.into(), pass: self.pass, worst: self.worst, note: self.note.into() }
    }
}

pub const SMALL_MASS_WINDOW: f64 = 1.0;
pub const GRADIENT_WINDOW: f64 = 0.0;

pub fn validate_assumptions(spec: &ModelSpec, g: &Grid, sample_budget: usize) -> AssumptionAudit {
    let budget = sample_budget.max(100);
    let nx = ((budget as f64).sqrt() as usize / 3).clamp(3, 16);
    let nv = (budget / nx).max(20);
    let xs: Vec<f64> = (0..nx).map(|k| g.x_lo + g.length() * k as f64 / (nx - 1) as f64).collect();
    let reaction = spec.reaction();

    let mut f1 = Tracker::new("F1", "F' strictly increasing on sampled r");
    let mut f2 = Tracker::new("F2", "[F']^-1(F'(r)) = r on sampled r");
    let mut c2 = Tracker::new("C2", "second differences of e >= -1e-9");
    let mut c3 = Tracker::new("C3", "e(z) - L|z| bounded below and e(z)/|z| growing, L in {0,1,10}");
    let mut c6 = Tracker::new("C6", "e' increasing and [e']^-1(e'(z)) = z within 1e-8");
    let mut c8 = Tracker::new("C8", "[e']^-1(log r + V) <= C0 r on (0, s)");
    let mut c9 = Tracker::new("C9", "integral of e(0, x) vanishes");
    let mut b3 = Tracker::new("B3", "rho_D positive");

    let rs: Vec<f64> = (0..nv).map(|k| (-12.0 + 24.0 * k as f64 / (nv - 1) as f64).exp()).collect();
    let (mut c0, mut b0) = (1.0f64, 0.0f64);
    let mut e0_integral = 0.0;
    for &x in &xs {
        let mut prev = f64::NEG_INFINITY;
        for &r in &rs {
            let fp = reaction.f_prime(r, x);
            f1.record(fp > prev, prev - fp, (x, r, fp));
            prev = fp;
            if let Some(back) = spec.cost.r_of(fp, x) {
                let err = (back - r).abs() / r.max(1.0);
                f2.record(err <= 1e-8, err, (x, r, back));
            } else {
                f2.record(false, f64::INFINITY, (x, r, fp));
            }
            if r < SMALL_MASS_WINDOW {
                let ratio = spec.e_prime_inverse(r.ln() + spec.v_at(x), x) / r;
                if ratio.is_finite() {
                    c0 = c0.max(ratio);
                }
                c8.record(ratio.is_finite(), ratio, (x, r, ratio));
            }
        }
    }
    let monotone = f1.pass;
    if !monotone {
        for t in [&mut c2, &mut c3, &mut c6] {
            t.note = "not evaluated: F' is not monotone";
            t.record(false, f64::INFINITY, (f64::NAN, f64::NAN, f64::NAN));
        }
    }
    for &x in xs.iter().filter(|_| monotone) {

        let a = spec.domain_lower(x);
        let z_lo = if a.is_finite() { a + 1e-6 * (1.0 + a.abs()) } else { -30.0 };
        let zs: Vec<f64> = (0..nv).map(|k| z_lo + (30.0 - z_lo) * k as f64 / (nv - 1) as f64).collect();
        let mut prev_ep = f64::NEG_INFINITY;
        for w in zs.windows(3) {
            let (z0, z1, z2) = (w[0], w[1], w[2]);
            let (e0, e1, e2) = (spec.e(z0, x), spec.e(z1, x), spec.e(z2, x));
            let second = e0 - 2.0 * e1 + e2;
            c2.record(second >= -1e-9, -second, (x, z1, second));
            let ep = spec.e_prime(z1, x);
            let back = spec.e_prime_inverse(ep, x);
            let err = (back - z1).abs() / (1.0 + z1.abs());
            c6.record(ep > prev_ep && err <= 1e-8, err, (x, z1, back));
            prev_ep = ep;
        }
        for l in [0.0, 1.0, 10.0] {
            let lower = zs.iter().map(|&z| spec.e(z, x) - l * z.abs()).fold(f64::INFINITY, f64::min);
            c3.record(lower.is_finite(), -lower, (x, l, lower));
        }
        let growth = spec.e(1e3, x) / 1e3 > spec.e(1e1, x) / 1e1;
        let growth_neg = !a.is_infinite() || spec.e(-1e3, x) / 1e3 > spec.e(-1e1, x) / 1e1;
        c3.record(growth && growth_neg, 0.0, (x, 1e3, spec.e(1e3, x)));

        let step = 1e-6 * g.length();
        for k in 0..nv {
            let p = GRADIENT_WINDOW - 40.0 * k as f64 / (nv - 1) as f64;
            let xp = (x + step).min(g.x_hi);
            let xm = (x - step).max(g.x_lo);
            let grad = (spec.e_prime_inverse(p, xp) - spec.e_prime_inverse(p, xm)) / (xp - xm);
            if grad.is_finite() {
                b0 = b0.max(grad.abs());
            }
        }
    }
    if b0 == 0.0 {
        b0 = f64::MIN_POSITIVE;
    }
    for &x in &g.cell_centers {
        e0_integral += spec.e(0.0, x) * g.dx;
    }
    c9.record(e0_integral.abs() <= 1e-10, e0_integral.abs(), (f64::NAN, 0.0, e0_integral));
    for (side, val) in [(g.x_lo, spec.rho_d.lower), (g.x_hi, spec.rho_d.upper)] {
        b3.record(val > 0.0, -val, (side, val, val));
    }

    let lip_v = spec.v.slope().abs();
    let lip_psi = (spec.psi.upper - spec.psi.lower).abs() / g.length();
    let lip_rho_d = (spec.rho_d.upper - spec.rho_d.lower).abs() / g.length();
    AssumptionAudit {
        c0,
        s: SMALL_MASS_WINDOW,
        s1: GRADIENT_WINDOW,
        b0,
        lip_v,
        lip_psi,
        lip_rho_d,
        checks: vec![f1.finish(), f2.finish(), c2.finish(), c3.finish(), c6.finish(), c8.finish(), c9.finish(), b3.finish()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, BoundaryValues};
    use crate::model::{Coef, ReactionSpec};

    #[test]
    fn linear_reaction_passes() {
        let g = build_grid(0.0, 1.0, 8).unwrap();
        let m = crate::model::presets::linear_relaxation(&g);
        let a = validate_assumptions(&m, &g, 400);
        assert!(a.all_pass(), "{:?}", a.checks);
        assert!(a.c0 >= 1.0 && a.c0.is_finite());
        assert!(a.b0.is_finite());
    }

    #[test]
    fn quadratic_cost_passes_superlinearity() {
        let g = build_grid(0.0, 1.0, 8).unwrap();
        let m = ModelSpec::from_dirichlet(&g, ReactionSpec::log(1.0, 0.0), Coef::constant(0.0), BoundaryValues::constant(1.0))
            .unwrap();
        let a = validate_assumptions(&m, &g, 400);
        assert!(a.check("C3").unwrap().pass);
        assert!(a.all_pass(), "{:?}", a.checks);
    }

    #[test]
    fn non_monotone_reaction_fails_f1() {
        let g = build_grid(0.0, 1.0, 8).unwrap();
        let bad = ReactionSpec::custom("wiggle", |r, _| r - 1.0 + 0.8 * (3.0 * r).sin(), |r, _| 1.0 + 2.4 * (3.0 * r).cos(), |_| -1.0);
        let m = ModelSpec::from_dirichlet(&g, bad, Coef::constant(0.0), BoundaryValues::constant(1.0)).unwrap();
        let a = validate_assumptions(&m, &g, 200);
        assert!(!a.check("F1").unwrap().pass);
    }
}

//! Model data: drift `V`, boundary data `ρ_D` and `Ψ`, the reaction `F` and the
//! derived cost integrand `e`, plus the entropy `E(ρ) = ∫ ρ log ρ − ρ + Vρ + 1`.

pub mod audit;
pub mod cost;
pub mod presets;
pub mod quadrature;
pub mod reaction;

pub use audit::{validate_assumptions, AssumptionAudit, AuditCheck};
pub use cost::{build_e_from_reaction, CostIntegrand};
pub use reaction::{invert_f_prime, Coef, ReactionSpec};

use crate::error::{Error, Result};
use crate::grid::{BoundaryValues, Grid};
use crate::transport::Density;

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub v: Coef,
    pub psi: BoundaryValues,
    pub rho_d: BoundaryValues,
    pub cost: CostIntegrand,
    pub audit: Option<AssumptionAudit>,
}

/// `Ψ(b) = log ρ_D(b) + V(b)` at both boundary nodes.
pub fn psi_from_dirichlet(rho_d: &BoundaryValues, v: &Coef, x_lo: f64, x_hi: f64) -> Result<BoundaryValues> {
    for (val, name) in [(rho_d.lower, "lower"), (rho_d.upper, "upper")] {
        if !(val > 0.0 && val.is_finite()) {
            return Err(Error::Constraint {
                assumption: "B3".into(),
                message: format!("rho_D at the {name} boundary must be positive, got {val}"),
            });
        }
    }
    Ok(BoundaryValues::new(rho_d.lower.ln() + v.at(x_lo), rho_d.upper.ln() + v.at(x_hi)))
}

impl ModelSpec {
    /// Model with `Ψ` derived from Dirichlet data on the grid's interval.
    pub fn from_dirichlet(g: &Grid, reaction: ReactionSpec, v: Coef, rho_d: BoundaryValues) -> Result<Self> {
        let psi = psi_from_dirichlet(&rho_d, &v, g.x_lo, g.x_hi)?;
        let probes = [g.x_lo, 0.5 * (g.x_lo + g.x_hi), g.x_hi];
        let cost = build_e_from_reaction(reaction, v, &probes)?;
        Ok(ModelSpec { v, psi, rho_d, cost, audit: None })
    }

    pub fn reaction(&self) -> &ReactionSpec {
        &self.cost.reaction
    }

    pub fn v_at(&self, x: f64) -> f64 {
        self.v.at(x)
    }

    pub fn grad_v(&self, _x: f64) -> f64 {
        self.v.slope()
    }

    pub fn e(&self, z: f64, x: f64) -> f64 {
        self.cost.e(z, x)
    }

    pub fn e_prime(&self, z: f64, x: f64) -> f64 {
        self.cost.e_prime(z, x)
    }

    pub fn e_prime_inverse(&self, p: f64, x: f64) -> f64 {
        self.cost.e_prime_inverse(p, x)
    }

    pub fn domain_lower(&self, x: f64) -> f64 {
        self.cost.domain_lower(x)
    }

    /// Interior extension of `Ψ` (linear interpolant of the boundary values).
    pub fn psi_at(&self, g: &Grid, x: f64) -> f64 {
        g.interpolate_boundary(&self.psi, x)
    }

    pub fn with_audit(mut self, g: &Grid, sample_budget: usize) -> Self {
        self.audit = Some(validate_assumptions(&self, g, sample_budget));
        self
    }

    pub fn sup_exp_neg_v(&self, g: &Grid) -> f64 {
        (-self.v.min_on(g.x_lo, g.x_hi)).exp()
    }

    pub fn inf_exp_neg_v(&self, g: &Grid) -> f64 {
        (-self.v.max_on(g.x_lo, g.x_hi)).exp()
    }
}

/// `[e′_x]⁻¹(p)`.
pub fn e_prime_inverse(spec: &ModelSpec, p: f64, x: f64) -> f64 {
    spec.e_prime_inverse(p, x)
}

/// Alias of [`e_prime_inverse`] used by the created-mass bounds.
pub fn m_r(spec: &ModelSpec, r: f64, x: f64) -> f64 {
    spec.e_prime_inverse(r, x)
}

/// `𝓔(z, x) = z log z − z + V(x) z + 1`, with `0 log 0 = 0`.
pub fn entropy_density(z: f64, v: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z * z.ln() - z + v * z + 1.0
    }
}

/// Midpoint-rule `E(ρ)`.
pub fn entropy_eval(spec: &ModelSpec, g: &Grid, rho: &Density) -> Result<f64> {
    let mut total = 0.0;
    for (i, &m) in rho.cell_mass.iter().enumerate() {
        if m < 0.0 {
            return Err(Error::NegativeDensity { cell: i, value: m / g.dx });
        }
        total += entropy_density(m / g.dx, spec.v_at(g.cell_centers[i])) * g.dx;
    }
    Ok(total)
}

/// `∫ Ψ dμ` with the linear extension of `Ψ`.
pub fn psi_moment(spec: &ModelSpec, g: &Grid, mass: &[f64]) -> f64 {
    mass.iter().zip(&g.cell_centers).map(|(m, &x)| m * spec.psi_at(g, x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn linear_model(g: &Grid, v: Coef) -> ModelSpec {
        ModelSpec::from_dirichlet(g, ReactionSpec::power(1.0, 0.0, 1.0), v, BoundaryValues::constant(1.0)).unwrap()
    }

    #[test]
    fn dirichlet_potential() {
        let zero = Coef::constant(0.0);
        let psi = psi_from_dirichlet(&BoundaryValues::constant(1.0), &zero, 0.0, 1.0).unwrap();
        assert_eq!(psi, BoundaryValues::constant(0.0));
        let psi = psi_from_dirichlet(&BoundaryValues::constant(1f64.exp()), &zero, 0.0, 1.0).unwrap();
        assert!((psi.lower - 1.0).abs() < 1e-15 && (psi.upper - 1.0).abs() < 1e-15);
        let psi = psi_from_dirichlet(&BoundaryValues::constant(2.0), &Coef::constant(0.5), 0.0, 1.0).unwrap();
        assert_eq!(psi.lower, 2f64.ln() + 0.5);
        assert!(psi_from_dirichlet(&BoundaryValues::new(0.0, 1.0), &zero, 0.0, 1.0).is_err());
        let v = Coef::linear(0.2, 0.7);
        let rd = BoundaryValues::new(0.3, 2.5);
        let psi = psi_from_dirichlet(&rd, &v, -1.0, 2.0).unwrap();
        assert!(((psi.lower - v.at(-1.0)).exp() - 0.3).abs() < 1e-15);
        assert!(((psi.upper - v.at(2.0)).exp() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn entropy_examples() {
        let g = build_grid(0.0, 1.0, 10).unwrap();
        let m = linear_model(&g, Coef::constant(0.0));
        let ones = Density::from_density(&g, &[1.0; 10]);
        assert!(entropy_eval(&m, &g, &ones).unwrap().abs() < 1e-15);
        let es = Density::from_density(&g, &[1f64.exp(); 10]);
        assert!((entropy_eval(&m, &g, &es).unwrap() - 1.0).abs() < 1e-14);
        let m1 = linear_model(&g, Coef::constant(1.0));
        assert!((entropy_eval(&m1, &g, &ones).unwrap() - 1.0).abs() < 1e-14);
        let neg = Density { cell_mass: vec![-0.1; 10] };
        assert!(entropy_eval(&m, &g, &neg).is_err());
        assert_eq!(entropy_density(0.0, 3.0), 1.0);
    }

    #[test]
    fn entropy_minimum_is_analytic() {
        for v in [-1.0, 0.0, 0.7, 2.0] {
            let z = f64::exp(-v);
            assert!((entropy_density(z, v) - (1.0 - z)).abs() < 1e-14);
            for dz in [-0.1, 0.1] {
                assert!(entropy_density(z * (1.0 + dz), v) > entropy_density(z, v));
            }
        }
    }

    #[test]
    fn e_prime_inverse_examples() {
        let g = build_grid(0.0, 1.0, 4).unwrap();
        let m = linear_model(&g, Coef::constant(0.0));
        assert!((e_prime_inverse(&m, 2f64.ln(), 0.3) - 1.0).abs() < 1e-15);
        assert_eq!(e_prime_inverse(&m, 0.0, 0.3), 0.0);
        assert_eq!(m_r(&m, 0.0, 0.3), 0.0);
        let lg = ModelSpec::from_dirichlet(&g, ReactionSpec::log(1.0, 0.0), Coef::linear(0.0, 1.0), BoundaryValues::constant(1.0))
            .unwrap();
        assert!(e_prime_inverse(&lg, 0.6, 0.6).abs() < 1e-15);
    }
}

//! Named reaction presets and the reference models used by tests and the CLI.

use crate::error::{Error, Result};
use crate::grid::{BoundaryValues, Grid};
use crate::model::reaction::{Coef, ReactionSpec};
use crate::model::ModelSpec;

pub const PRESET_NAMES: [&str; 3] = ["power", "log", "signed-power"];

/// Parameters of a named preset; `exponent` is β for `power` and α for `signed-power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetParams {
    pub w: Coef,
    pub exponent: Coef,
    pub q: Coef,
}

/// Looks up a preset by name and checks the positivity requirements on `[x_lo, x_hi]`.
pub fn reaction_preset(name: &str, p: PresetParams, x_lo: f64, x_hi: f64) -> Result<ReactionSpec> {
    let err = |id: &str, message: String| Error::Constraint { assumption: id.into(), message };
    if p.w.min_on(x_lo, x_hi) <= 0.0 {
        return Err(err("W>0", "W must be strictly positive".into()));
    }
    if p.q.min_on(x_lo, x_hi) < 0.0 {
        return Err(err("Q>=0", "Q must be non-negative".into()));
    }
    match name {
        "power" => {
            if p.exponent.min_on(x_lo, x_hi) < 0.0 {
                return Err(err("beta>=0", "beta must be non-negative".into()));
            }
            if p.q.min_on(x_lo, x_hi) <= 0.0 {
                return Err(err("Q>0", "power preset needs Q > 0 for F' to cross zero".into()));
            }
            Ok(ReactionSpec::Power { w: p.w, beta: p.exponent, q: p.q })
        }
        "log" => Ok(ReactionSpec::Log { w: p.w, q: p.q }),
        "signed-power" => {
            if p.exponent.min_on(x_lo, x_hi) <= 0.0 || p.exponent.max_on(x_lo, x_hi) >= 1.0 {
                return Err(err("alpha", "alpha must lie in (0, 1)".into()));
            }
            Ok(ReactionSpec::SignedPower { w: p.w, alpha: p.exponent, q: p.q })
        }
        other => Err(Error::Config(format!("unknown reaction preset '{other}' (known: {PRESET_NAMES:?})"))),
    }
}

/// `V ≡ 0`, `ρ_D ≡ 1`, `F′(ρ) = ρ − 1`.
pub fn linear_relaxation(g: &Grid) -> ModelSpec {
    ModelSpec::from_dirichlet(g, ReactionSpec::power(1.0, 0.0, 1.0), Coef::constant(0.0), BoundaryValues::constant(1.0))
        .expect("reference model is valid")
}

/// `1 + amplitude·sin(π (x − x_lo)/L)` sampled at cell centres.
pub fn sine_bump(g: &Grid, amplitude: f64) -> Vec<f64> {
    g.cell_centers
        .iter()
        .map(|&x| 1.0 + amplitude * (std::f64::consts::PI * (x - g.x_lo) / g.length()).sin())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(w: f64, e: f64, q: f64) -> PresetParams {
        PresetParams { w: Coef::constant(w), exponent: Coef::constant(e), q: Coef::constant(q) }
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(reaction_preset("power", params(1.0, 0.0, 1.0), 0.0, 1.0).unwrap().label(), "power");
        assert_eq!(reaction_preset("log", params(1.0, 0.0, 0.0), 0.0, 1.0).unwrap().label(), "log");
        assert!(reaction_preset("signed-power", params(1.0, 1.2, 0.0), 0.0, 1.0).is_err());
        assert!(reaction_preset("power", params(1.0, 0.0, -1.0), 0.0, 1.0).is_err());
        assert!(reaction_preset("cubic", params(1.0, 0.0, 1.0), 0.0, 1.0).is_err());
        let q_lin = PresetParams { q: Coef::linear(0.5, -1.0), ..params(1.0, 0.0, 0.0) };
        assert!(reaction_preset("log", q_lin, 0.0, 1.0).is_err());
    }
}

//! Experiment configuration in TOML. Unknown keys are rejected; every section
//! and field has a default, so an empty document describes the stationary model
//! `F′(ρ) = ρ − 1`, `V ≡ 0`, `ρ_D ≡ 1`, `ρ₀ ≡ 1`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{build_grid, BoundaryValues, Grid};
use crate::model::presets::{reaction_preset, PresetParams};
use crate::model::{Coef, ModelSpec};
use crate::transport::{Density, SolverOptions};

/// A coefficient given as a number or as `{ constant, slope }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefConfig {
    Constant(f64),
    Linear(LinearCoef),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearCoef {
    pub constant: f64,
    pub slope: f64,
}

impl CoefConfig {
    pub fn to_coef(self) -> Coef {
        match self {
            CoefConfig::Constant(c) => Coef::constant(c),
            CoefConfig::Linear(l) => Coef::linear(l.constant, l.slope),
        }
    }
}

/// Dirichlet data as one number for both ends or `{ lower, upper }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundaryConfig {
    Both(f64),
    Sides(SideValues),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideValues {
    pub lower: f64,
    pub upper: f64,
}

impl BoundaryConfig {
    pub fn values(self) -> BoundaryValues {
        match self {
            BoundaryConfig::Both(v) => BoundaryValues::constant(v),
            BoundaryConfig::Sides(s) => BoundaryValues::new(s.lower, s.upper),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_cells: usize,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { x_lo: 0.0, x_hi: 1.0, n_cells: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// `power`, `log` or `signed-power`.
    pub preset: String,
    pub w: CoefConfig,
    /// β for `power`, α for `signed-power`, unused for `log`.
    pub exponent: CoefConfig,
    pub q: CoefConfig,
    pub v: CoefConfig,
    pub rho_d: BoundaryConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            preset: "power".into(),
            w: CoefConfig::Constant(1.0),
            exponent: CoefConfig::Constant(0.0),
            q: CoefConfig::Constant(1.0),
            v: CoefConfig::Constant(0.0),
            rho_d: BoundaryConfig::Both(1.0),
        }
    }
}

/// `ρ₀ = value + amplitude·sin(π(x − x_lo)/L)`, or explicit cell `values` when given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub value: f64,
    pub amplitude: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig { value: 1.0, amplitude: 0.0, values: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub tau: f64,
    pub tau_list: Vec<f64>,
    pub t_final: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig { tau: 0.05, tau_list: vec![0.08, 0.04, 0.02, 0.01], t_final: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub kkt_tol: f64,
    pub max_iters: usize,
    pub eps0_factor: f64,
    pub eps_min_factor: f64,
    pub polish: bool,
    pub extra_halvings: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverConfig {
            tol: o.tol,
            kkt_tol: o.kkt_tol,
            max_iters: o.max_iters,
            eps0_factor: o.eps0_factor,
            eps_min_factor: o.eps_min_factor,
            polish: o.polish,
            extra_halvings: o.extra_halvings,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            kkt_tol: self.kkt_tol,
            max_iters: self.max_iters,
            eps0_factor: self.eps0_factor,
            eps_min_factor: self.eps_min_factor,
            polish: self.polish,
            extra_halvings: self.extra_halvings,
            ..SolverOptions::default()
        }
    }
}

/// Finite-difference reference: grid refinement factor and time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub ratio: usize,
    pub dt: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig { ratio: 4, dt: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub diagnostics: bool,
    /// Supported pairs sampled per step by the perturbation-inequality check.
    pub inequality_samples: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into(), diagnostics: true, inequality_samples: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub model: ModelConfig,
    pub initial: InitialConfig,
    pub scheme: SchemeConfig,
    pub solver: SolverConfig,
    pub reference: ReferenceConfig,
    pub output: OutputConfig,
}

/// Validated, ready-to-run pieces of a configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub grid: Grid,
    pub spec: ModelSpec,
    pub rho0: Density,
    pub opts: SolverOptions,
}

fn constraint(id: &str, message: impl Into<String>) -> Error {
    Error::Constraint { assumption: id.into(), message: message.into() }
}

impl ExperimentConfig {
    pub fn preset_params(&self) -> PresetParams {
        PresetParams { w: self.model.w.to_coef(), exponent: self.model.exponent.to_coef(), q: self.model.q.to_coef() }
    }

    /// Model built on an arbitrary grid of the configured interval.
    pub fn model_on(&self, g: &Grid) -> Result<ModelSpec> {
        let reaction = reaction_preset(&self.model.preset, self.preset_params(), g.x_lo, g.x_hi)?;
        ModelSpec::from_dirichlet(g, reaction, self.model.v.to_coef(), self.model.rho_d.values())
    }

    /// Initial density on `g`; explicit values are repeated or averaged when `g`
    /// refines or coarsens the configured grid.
    pub fn initial_on(&self, g: &Grid) -> Result<Vec<f64>> {
        let rho: Vec<f64> = if self.initial.values.is_empty() {
            g.cell_centers
                .iter()
                .map(|&x| self.initial.value + self.initial.amplitude * (std::f64::consts::PI * (x - g.x_lo) / g.length()).sin())
                .collect()
        } else if self.initial.values.len() == g.n_cells {
            self.initial.values.clone()
        } else if g.n_cells % self.initial.values.len() == 0 {
            let r = g.n_cells / self.initial.values.len();
            self.initial.values.iter().flat_map(|&v| std::iter::repeat(v).take(r)).collect()
        } else if self.initial.values.len() % g.n_cells == 0 {
            let r = self.initial.values.len() / g.n_cells;
            self.initial.values.chunks(r).map(|c| c.iter().sum::<f64>() / r as f64).collect()
        } else {
            return Err(Error::Config(format!(
                "initial.values has {} entries, expected {}",
                self.initial.values.len(),
                g.n_cells
            )));
        };
        if let Some(i) = rho.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(constraint("rho0>0", format!("initial density {} in cell {i} is not positive", rho[i])));
        }
        Ok(rho)
    }

    pub fn build(&self) -> Result<Experiment> {
        let d = &self.domain;
        let grid = build_grid(d.x_lo, d.x_hi, d.n_cells).map_err(|e| Error::Config(e.to_string()))?;
        let spec = self.model_on(&grid)?;
        let rho0 = Density::from_density(&grid, &self.initial_on(&grid)?);
        Ok(Experiment { grid, spec, rho0, opts: self.solver.options() })
    }

    pub fn validate(&self) -> Result<()> {
        self.build()?;
        let s = &self.scheme;
        if !(s.t_final > 0.0 && s.t_final.is_finite()) {
            return Err(Error::Config(format!("scheme.t_final must be positive, got {}", s.t_final)));
        }
        if !(s.tau > 0.0 && s.tau < s.t_final) {
            return Err(Error::Config(format!("scheme.tau must lie in (0, t_final), got {}", s.tau)));
        }
        if s.tau_list.iter().any(|&t| !(t > 0.0 && t < s.t_final)) {
            return Err(Error::Config("scheme.tau_list entries must lie in (0, t_final)".into()));
        }
        if !s.tau_list.windows(2).all(|w| w[1] < w[0]) {
            return Err(Error::Config("scheme.tau_list must be strictly decreasing".into()));
        }
        if self.reference.ratio == 0 || !(self.reference.dt > 0.0) {
            return Err(Error::Config("reference.ratio must be >= 1 and reference.dt positive".into()));
        }
        let o = &self.solver;
        if !(o.tol > 0.0 && o.kkt_tol > 0.0 && o.eps0_factor > 0.0 && o.eps_min_factor > 0.0 && o.max_iters > 0) {
            return Err(Error::Config("solver tolerances, factors and max_iters must be positive".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the rendered domain and model sections.
    pub fn model_hash(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            domain: &'a DomainConfig,
            model: &'a ModelConfig,
        }
        let text = toml::to_string(&Key { domain: &self.domain, model: &self.model }).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn render(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

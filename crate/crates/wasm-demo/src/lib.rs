//! Browser bindings: a JKO trajectory against the finite-difference reference,
//! the Ψ-weighted boundary projection, and the plan of a single JKO step.

use wasm_bindgen::prelude::*;
use wbflow::grid::{nearest_boundary_projection, weighted_boundary_projection, BoundaryValues, Sign};
use wbflow::model::presets::{reaction_preset, PresetParams};
use wbflow::model::Coef;
use wbflow::pde::{compare_trajectories, fd_at, restrict, solve_fd};
use wbflow::{build_grid, flow, Density, ModelSpec, SolverOptions};

const FD_RATIO: usize = 4;

fn err(e: wbflow::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn model(g: &wbflow::Grid, preset: &str, rho_d: f64) -> wbflow::Result<ModelSpec> {
    let (exponent, q) = match preset {
        "signed-power" => (0.5, 1.0),
        "log" => (0.0, 0.5),
        _ => (0.0, 1.0),
    };
    let p = PresetParams { w: Coef::constant(1.0), exponent: Coef::constant(exponent), q: Coef::constant(q) };
    let reaction = reaction_preset(preset, p, g.x_lo, g.x_hi)?;
    ModelSpec::from_dirichlet(g, reaction, Coef::constant(0.0), BoundaryValues::constant(rho_d))
}

fn initial(g: &wbflow::Grid, base: f64, amplitude: f64) -> Vec<f64> {
    g.cell_centers.iter().map(|&x| base + amplitude * (std::f64::consts::PI * x).sin()).collect()
}

#[wasm_bindgen]
pub struct Comparison {
    x: Vec<f64>,
    jko: Vec<f64>,
    fd: Vec<f64>,
    distance: f64,
    steps: usize,
}

#[wasm_bindgen]
impl Comparison {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn jko(&self) -> Vec<f64> {
        self.jko.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn fd(&self) -> Vec<f64> {
        self.fd.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn distance(&self) -> f64 {
        self.distance
    }
    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> usize {
        self.steps
    }
}

pub fn comparison(n: usize, tau: f64, t_final: f64, base: f64, amplitude: f64, preset: &str) -> wbflow::Result<Comparison> {
    let g = build_grid(0.0, 1.0, n)?;
    let spec = model(&g, preset, 1.0)?;
    let rho0 = initial(&g, base, amplitude);
    let traj = flow::run_minimizing_movement(&g, &spec, &Density::from_density(&g, &rho0), tau, t_final, &SolverOptions::default())?;
    let fg = build_grid(0.0, 1.0, n * FD_RATIO)?;
    let fd = solve_fd(&fg, &model(&fg, preset, 1.0)?, &initial(&fg, base, amplitude), t_final, (tau / 10.0).min(1e-2))?;
    Ok(Comparison {
        x: g.cell_centers.clone(),
        jko: traj.last().rho.density(&g),
        fd: restrict(&fd_at(&fd, t_final), FD_RATIO),
        distance: compare_trajectories(&traj, &g, &fd, t_final)?,
        steps: traj.len() - 1,
    })
}

/// JKO trajectory of the chosen preset with `ρ₀ = base + amplitude·sin(πx)`, against the FD reference.
#[wasm_bindgen(js_name = compareTrajectories)]
pub fn compare_js(n: usize, tau: f64, t_final: f64, base: f64, amplitude: f64, preset: &str) -> Result<Comparison, JsError> {
    comparison(n, tau, t_final, base, amplitude, preset).map_err(err)
}

/// Rows `[x, nearest, P_{+Ψ}, P_{−Ψ}]` flattened, for `samples` points of `[0, 1]`.
pub fn projections(psi_lower: f64, psi_upper: f64, tau: f64, samples: usize) -> wbflow::Result<Vec<f64>> {
    let g = build_grid(0.0, 1.0, 1)?;
    let psi = BoundaryValues::new(psi_lower, psi_upper);
    let mut out = Vec::with_capacity(4 * samples);
    for k in 0..samples {
        let x = k as f64 / (samples.max(2) - 1) as f64;
        out.push(x);
        out.push(nearest_boundary_projection(&g, x)?.point);
        out.push(weighted_boundary_projection(&g, x, &psi, tau, Sign::Plus)?.point);
        out.push(weighted_boundary_projection(&g, x, &psi, tau, Sign::Minus)?.point);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = boundaryProjections)]
pub fn projections_js(psi_lower: f64, psi_upper: f64, tau: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    projections(psi_lower, psi_upper, tau, samples).map_err(err)
}

#[wasm_bindgen]
pub struct StepView {
    nodes: usize,
    plan: Vec<f64>,
    rho: Vec<f64>,
    h: Vec<f64>,
    boundary_flux: f64,
}

#[wasm_bindgen]
impl StepView {
    /// Nodes per side of the plan: cells, then the lower and upper boundary.
    #[wasm_bindgen(getter)]
    pub fn nodes(&self) -> usize {
        self.nodes
    }
    #[wasm_bindgen(getter)]
    pub fn plan(&self) -> Vec<f64> {
        self.plan.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn rho(&self) -> Vec<f64> {
        self.rho.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn h(&self) -> Vec<f64> {
        self.h.clone()
    }
    #[wasm_bindgen(getter, js_name = boundaryFlux)]
    pub fn boundary_flux(&self) -> f64 {
        self.boundary_flux
    }
}

pub fn single_step(n: usize, tau: f64, base: f64, amplitude: f64, rho_d: f64, preset: &str) -> wbflow::Result<StepView> {
    let g = build_grid(0.0, 1.0, n)?;
    let spec = model(&g, preset, rho_d)?;
    let mu = Density::from_density(&g, &initial(&g, base, amplitude));
    let (_, sol) = wbflow::transport::solve_jko_step(&g, &spec, tau, &mu, &SolverOptions::default())?;
    let nn = sol.n_nodes();
    let boundary_flux = (0..nn)
        .flat_map(|i| (0..nn).map(move |j| (i, j)))
        .filter(|&(i, j)| i >= n || j >= n)
        .map(|(i, j)| sol.gamma(i, j))
        .sum();
    Ok(StepView { nodes: nn, plan: sol.gamma.clone(), rho: sol.rho.clone(), h: sol.h.clone(), boundary_flux })
}

/// Plan, new density and created mass of one JKO step.
#[wasm_bindgen(js_name = singleStep)]
pub fn single_step_js(n: usize, tau: f64, base: f64, amplitude: f64, rho_d: f64, preset: &str) -> Result<StepView, JsError> {
    single_step(n, tau, base, amplitude, rho_d, preset).map_err(err)
}

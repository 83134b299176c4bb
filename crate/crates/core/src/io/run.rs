//! Experiment orchestration for the six commands.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::flow::{barrier_check, run_minimizing_movement, tau_refinement_study, Trajectory};
use crate::grid::{build_grid, BoundaryValues, Grid};
use crate::io::config::{Experiment, ExperimentConfig};
use crate::io::report::{CsvTable, RunReport};
use crate::model::presets::{linear_relaxation, reaction_preset, PresetParams, PRESET_NAMES};
use crate::model::{validate_assumptions, Coef, ModelSpec};
use crate::pde::{compare_trajectories, fd_at, restrict, solve_fd, FDSolution};
use crate::transport::diagnostics::{cyclical_monotonicity, perturbation_inequalities, transported_mass_check};
use crate::transport::{brute_force_small, extract_potentials, solve_with_init, Density, OracleOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Process exit code for an error class.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Constraint { .. } | Error::InvalidArgument(_) | Error::InvalidGrid(_) | Error::OutOfDomain { .. } => {
            EXIT_CONFIG
        }
        Error::Io(_) => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Sweep,
    Oracle,
    Compare,
    Audit,
    Verify,
}

impl Command {
    pub const ALL: [Command; 6] = [Command::Solve, Command::Sweep, Command::Oracle, Command::Compare, Command::Audit, Command::Verify];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Oracle => "oracle",
            Command::Compare => "compare",
            Command::Audit => "audit",
            Command::Verify => "verify",
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown command '{s}'")))
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, command: Command) -> Result<RunReport> {
    cfg.validate()?;
    let ex = cfg.build()?;
    let mut report = RunReport { command: command.as_str().into(), ..RunReport::default() };
    match command {
        Command::Solve => solve(cfg, &ex, &mut report)?,
        Command::Sweep => sweep(cfg, &ex, &mut report)?,
        Command::Oracle => oracle(cfg, &mut report)?,
        Command::Compare => compare(cfg, &ex, &mut report)?,
        Command::Audit => audit(cfg, &ex, &mut report),
        Command::Verify => verify(cfg, &ex, &mut report)?,
    }
    Ok(report)
}

pub fn trajectory_table(traj: &Trajectory, g: &Grid, hash: &str) -> CsvTable {
    let mut t = CsvTable::new("trajectory", "wbflow.trajectory.v1", hash, &["step", "t", "x", "rho", "h", "phi_star"]);
    for s in &traj.snapshots {
        let rho = s.rho.density(g);
        for (i, &x) in g.cell_centers.iter().enumerate() {
            let (h, ps) = s.record.as_ref().map_or((f64::NAN, f64::NAN), |r| (r.h[i], r.phi_star[i]));
            t.push(vec![s.step.into(), s.t.into(), x.into(), rho[i].into(), h.into(), ps.into()]);
        }
    }
    t
}

pub fn fd_table(sol: &FDSolution, hash: &str) -> CsvTable {
    let mut t = CsvTable::new("reference", "wbflow.trajectory.v1", hash, &["step", "t", "x", "rho", "h", "phi_star"]);
    for (k, (time, vals)) in sol.times.iter().zip(&sol.values).enumerate() {
        for (&x, &r) in sol.grid.cell_centers.iter().zip(vals) {
            t.push(vec![k.into(), (*time).into(), x.into(), r.into(), f64::NAN.into(), f64::NAN.into()]);
        }
    }
    t
}

fn diagnostics_table(traj: &Trajectory, g: &Grid, spec: &ModelSpec, hash: &str) -> CsvTable {
    let mut t = CsvTable::new(
        "diagnostics",
        "wbflow.diagnostics.v1",
        hash,
        &[
            "step",
            "t",
            "energy",
            "quadratic_cost",
            "boundary_flux",
            "max_displacement",
            "created_mass_l1",
            "created_mass_linf",
            "energy_rhs",
            "kkt_residual",
            "jko_residual",
            "c_concavity_gap",
            "barrier_margin",
            "trace_gap",
        ],
    );
    let barrier = barrier_check(traj, spec, g);
    for (s, b) in traj.snapshots.iter().zip(&barrier.steps) {
        let Some(rec) = &s.record else { continue };
        let Some(d) = &rec.diagnostics else { continue };
        let p = extract_potentials(rec, spec, g);
        t.push(vec![
            s.step.into(),
            s.t.into(),
            s.energy.into(),
            d.quadratic_cost.into(),
            d.boundary_flux.into(),
            d.max_displacement.into(),
            d.created_mass_l1.into(),
            d.created_mass_linf.into(),
            d.energy_inequality_rhs.into(),
            p.kkt_residual.into(),
            p.jko_residual.into(),
            p.c_concavity_gap.into(),
            b.worst_margin.into(),
            d.trace_gap.into(),
        ]);
    }
    t
}

fn solve(cfg: &ExperimentConfig, ex: &Experiment, report: &mut RunReport) -> Result<()> {
    let hash = cfg.model_hash();
    let traj = run_minimizing_movement(&ex.grid, &ex.spec, &ex.rho0, cfg.scheme.tau, cfg.scheme.t_final, &ex.opts)?;
    let barrier = barrier_check(&traj, &ex.spec, &ex.grid);
    report.summary.push(format!("model {} ({}), n = {}, tau = {}, steps = {}", hash, ex.spec.reaction().label(), ex.grid.n_cells, traj.tau, traj.len() - 1));
    report.summary.push(format!("energy {:.6e} -> {:.6e}", traj.snapshots[0].energy, traj.last().energy));
    report.summary.push(format!("barrier violations: {}", barrier.violations));
    report.summary.extend(traj.warnings.iter().cloned());
    report.tables.push(trajectory_table(&traj, &ex.grid, &hash));
    if cfg.output.diagnostics {
        report.tables.push(diagnostics_table(&traj, &ex.grid, &ex.spec, &hash));
    }
    Ok(())
}

fn reference(cfg: &ExperimentConfig) -> Result<FDSolution> {
    let d = &cfg.domain;
    let fg = build_grid(d.x_lo, d.x_hi, d.n_cells * cfg.reference.ratio)?;
    let spec = cfg.model_on(&fg)?;
    let rho0 = cfg.initial_on(&fg)?;
    solve_fd(&fg, &spec, &rho0, cfg.scheme.t_final, cfg.reference.dt)
}

fn sweep(cfg: &ExperimentConfig, ex: &Experiment, report: &mut RunReport) -> Result<()> {
    let fd = reference(cfg)?;
    let study = tau_refinement_study(&ex.grid, &ex.spec, &ex.rho0, cfg.scheme.t_final, &cfg.scheme.tau_list, &fd, &ex.opts)?;
    let mut t = CsvTable::new("convergence", "wbflow.convergence.v1", &cfg.model_hash(), &["tau", "steps", "error"]);
    for r in &study.rows {
        t.push(vec![r.tau.into(), r.steps.into(), r.error.into()]);
        report.summary.push(format!("tau {:<8} steps {:<5} error {:.6e}", r.tau, r.steps, r.error));
    }
    match study.order {
        Some(o) => report.summary.push(format!("fitted order {o:.4}")),
        None => report.summary.push("fitted order undefined (zero error)".into()),
    }
    report.summary.push(format!("errors strictly decreasing: {}", study.strictly_decreasing()));
    report.tables.push(t);
    Ok(())
}

fn oracle(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let fd = reference(cfg)?;
    report.summary.push(format!("finite-difference solve: {} cells, {} steps", fd.grid.n_cells, fd.times.len() - 1));
    report.tables.push(fd_table(&fd, &cfg.model_hash()));
    Ok(())
}

fn compare(cfg: &ExperimentConfig, ex: &Experiment, report: &mut RunReport) -> Result<()> {
    let fd = reference(cfg)?;
    let traj = run_minimizing_movement(&ex.grid, &ex.spec, &ex.rho0, cfg.scheme.tau, cfg.scheme.t_final, &ex.opts)?;
    let dist = compare_trajectories(&traj, &ex.grid, &fd, cfg.scheme.t_final)?;
    report.summary.push(format!("L2(0,T; L2_loc) distance JKO vs FD: {dist:.6e}"));
    let mut t = CsvTable::new("profile", "wbflow.profile.v1", &cfg.model_hash(), &["x", "rho_jko", "rho_fd"]);
    let jko = traj.last().rho.density(&ex.grid);
    let fdv = restrict(&fd_at(&fd, cfg.scheme.t_final), cfg.reference.ratio);
    for (i, &x) in ex.grid.cell_centers.iter().enumerate() {
        t.push(vec![x.into(), jko[i].into(), fdv[i].into()]);
    }
    report.tables.push(t);
    Ok(())
}

fn audit(cfg: &ExperimentConfig, ex: &Experiment, report: &mut RunReport) {
    let a = validate_assumptions(&ex.spec, &ex.grid, 400);
    report.summary.push(format!(
        "C0 = {:.6e}, s = {:.6e}, s1 = {:.6e}, B0 = {:.6e}, Lip(V) = {:.6e}, Lip(Psi) = {:.6e}, Lip(rho_D) = {:.6e}",
        a.c0, a.s, a.s1, a.b0, a.lip_v, a.lip_psi, a.lip_rho_d
    ));
    let mut t = CsvTable::new("audit", "wbflow.audit.v1", &cfg.model_hash(), &["id", "pass", "x", "argument", "value", "note"]);
    for c in &a.checks {
        t.push(vec![c.id.clone().into(), c.pass.into(), c.worst.0.into(), c.worst.1.into(), c.worst.2.into(), c.note.clone().into()]);
        report.summary.push(format!("{:<4} {}", c.id, if c.pass { "pass" } else { "FAIL" }));
    }
    report.tables.push(t);
}

struct Suite {
    name: String,
    worst: f64,
    tol: f64,
}

fn oracle_instances() -> Vec<(String, Grid, ModelSpec, f64, Density, Option<Density>)> {
    let mut out = Vec::new();
    for (k, name) in PRESET_NAMES.iter().enumerate() {
        let exponent = if *name == "signed-power" { 0.5 } else { 1.0 };
        let q = if *name == "log" { 0.5 } else { 1.0 };
        let p = PresetParams { w: Coef::constant(1.0), exponent: Coef::constant(exponent), q: Coef::constant(q) };
        for n in [2usize, 3] {
            let g = build_grid(0.0, 1.0, n).expect("valid grid");
            let reaction = reaction_preset(name, p, 0.0, 1.0).expect("valid preset");
            let spec = ModelSpec::from_dirichlet(&g, reaction, Coef::linear(0.0, 0.5 - 0.25 * k as f64), BoundaryValues::new(1.2, 0.8))
                .expect("valid model");
            let mu: Vec<f64> = (0..n).map(|i| 0.6 + 0.3 * (i + k) as f64).collect();
            let rho: Vec<f64> = (0..n).map(|i| 1.1 - 0.2 * i as f64).collect();
            let mu = Density::from_density(&g, &mu);
            let tau = 0.1 + 0.05 * n as f64;
            out.push((format!("{name} n={n} fixed"), g.clone(), spec.clone(), tau, mu.clone(), Some(Density::from_density(&g, &rho))));
            out.push((format!("{name} n={n} jko"), g, spec, tau, mu, None));
        }
    }
    out
}

/// Brute-force equivalence, KKT, barrier, perturbation, monotonicity and stationarity suites.
fn verify(cfg: &ExperimentConfig, ex: &Experiment, report: &mut RunReport) -> Result<()> {
    let mut suites: Vec<Suite> = Vec::new();
    let opts = &ex.opts;
    let (mut dv, mut dh) = (0.0f64, 0.0f64);
    for (label, g, spec, tau, mu, rho) in oracle_instances() {
        let sol = solve_with_init(&g, &spec, tau, &mu, rho.as_ref(), opts, None)?;
        let orc = brute_force_small(&g, &spec, tau, &mu, rho.as_ref(), &OracleOptions::default())?;
        let value = if rho.is_some() { sol.primal_value } else { sol.objective };
        dv = dv.max((value - orc.value).abs());
        let excess = sol.h.iter().zip(&orc.h).map(|(a, b)| (a - b).abs() - orc.h_resolution).fold(f64::NEG_INFINITY, f64::max);
        dh = dh.max(excess);
        report.summary.push(format!("oracle {label}: |value diff| = {:.3e}", (value - orc.value).abs()));
    }
    suites.push(Suite { name: "oracle value".into(), worst: dv, tol: 1e-6 });
    suites.push(Suite { name: "oracle h beyond resolution".into(), worst: dh, tol: 0.0 });

    let n_small = ex.grid.n_cells.min(16);
    let g = build_grid(ex.grid.x_lo, ex.grid.x_hi, n_small)?;
    let spec = cfg.model_on(&g)?;
    let rho0 = Density::from_density(&g, &cfg.initial_on(&g)?);
    let traj = run_minimizing_movement(&g, &spec, &rho0, cfg.scheme.tau, cfg.scheme.t_final, opts)?;
    let (mut jko, mut kkt, mut gap, mut pert, mut cm) = (0.0f64, 0.0f64, 0.0f64, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut mass_bound = 0.0f64;
    for rec in traj.records() {
        let p = extract_potentials(rec, &spec, &g);
        jko = jko.max(p.jko_residual);
        kkt = kkt.max(p.kkt_residual);
        gap = gap.max(p.c_concavity_gap);
        pert = pert.max(perturbation_inequalities(rec, &g, &spec, cfg.output.inequality_samples, 17).worst_violation);
        cm = cm.max(cyclical_monotonicity(rec, &g, &spec, 200, 23));
        let m = transported_mass_check(rec, &g, &spec);
        if !m.holds {
            mass_bound = mass_bound.max(0.25 * m.lambda0 - m.min_transported);
        }
    }
    suites.push(Suite { name: "JKO optimality residual".into(), worst: jko, tol: 1e-5 });
    suites.push(Suite { name: "KKT constancy residual".into(), worst: kkt, tol: 1e-5 });
    suites.push(Suite { name: "c-concavity gap".into(), worst: gap, tol: 1e-6 });
    suites.push(Suite { name: "perturbation inequalities".into(), worst: pert, tol: 1e-5 });
    suites.push(Suite { name: "cyclical monotonicity".into(), worst: cm, tol: 1e-8 });
    suites.push(Suite { name: "transported-mass bound".into(), worst: mass_bound, tol: 0.0 });
    suites.push(Suite { name: "barrier violations".into(), worst: barrier_check(&traj, &spec, &g).violations as f64, tol: 0.0 });

    let gs = build_grid(0.0, 1.0, 16)?;
    let stat = linear_relaxation(&gs);
    let ones = Density::constant(&gs, 1.0);
    let st = run_minimizing_movement(&gs, &stat, &ones, 0.1, 1.0, opts)?;
    let dev = st.densities(&gs).iter().flatten().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    suites.push(Suite { name: "stationary JKO".into(), worst: dev, tol: 1e-6 });
    let fd = solve_fd(&gs, &stat, &[1.0; 16], 1.0, 0.01)?;
    let fdev = fd.values.iter().flatten().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    suites.push(Suite { name: "stationary FD".into(), worst: fdev, tol: 1e-8 });

    let mut t = CsvTable::new("verify", "wbflow.verify.v1", &cfg.model_hash(), &["suite", "pass", "worst", "tolerance"]);
    for s in &suites {
        let pass = s.worst <= s.tol;
        t.push(vec![s.name.clone().into(), pass.into(), s.worst.into(), s.tol.into()]);
        report.summary.push(format!("{:<28} {:<4} worst {:.3e} (tol {:.0e})", s.name, if pass { "pass" } else { "FAIL" }, s.worst, s.tol));
        if !pass {
            report.failures.push(format!("{}: {:.3e} > {:.0e}", s.name, s.worst, s.tol));
        }
    }
    report.tables.push(t);
    Ok(())
}

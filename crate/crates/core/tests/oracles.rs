//! Solver values against oracles written independently here: a single-cell
//! transport problem whose inner linear program is solved in closed form, and
//! the exact decaying mode of `ρ_t = ρ_xx − (ρ − 1)`.

use std::f64::consts::PI;

use wbflow::flow::study::{energy_ledger, fit_energy_constant, telescoping_check};
use wbflow::flow::run_minimizing_movement;
use wbflow::grid::BoundaryValues;
use wbflow::model::presets::{linear_relaxation, sine_bump};
use wbflow::model::{entropy_density, Coef};
use wbflow::pde::solve_fd;
use wbflow::transport::solve_with_init;
use wbflow::{build_grid, Density, ModelSpec, ReactionSpec, SolverOptions};

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..300 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// One cell of width 1 centred at 1/2: keep what can stay, export the surplus and
/// import the deficit through the cheapest boundary node.
fn one_cell_lp(spec: &ModelSpec, tau: f64, mu: f64, m: f64) -> f64 {
    if m < 0.0 {
        return f64::INFINITY;
    }
    let q = 0.25 / (2.0 * tau);
    let (a, b) = (spec.psi.lower, spec.psi.upper);
    let out = (q + a).min(q + b);
    let inn = (q - a).min(q - b);
    let keep = if out + inn > 0.0 { mu.min(m) } else { 0.0 };
    (mu - keep) * out + (m - keep) * inn
}

fn fixed_oracle(spec: &ModelSpec, tau: f64, mu: f64, rho: f64) -> f64 {
    let f = |h: f64| one_cell_lp(spec, tau, mu, rho + tau * h) + tau * spec.e(h, 0.5);
    let lo = (-rho / tau).max(spec.domain_lower(0.5));
    golden(f, lo, 40.0).1
}

fn jko_oracle(spec: &ModelSpec, tau: f64, mu: f64) -> f64 {
    let v = spec.v_at(0.5);
    let inner = |h: f64| {
        let g = |lr: f64| {
            let r = lr.exp();
            one_cell_lp(spec, tau, mu, r + tau * h) + entropy_density(r, v)
        };
        golden(g, -30.0, 5.0).1 + tau * spec.e(h, 0.5)
    };
    let lo = spec.domain_lower(0.5).max(-40.0);
    golden(inner, lo, 40.0).1
}

fn cases() -> Vec<(&'static str, ModelSpec, f64, f64, f64)> {
    let g = build_grid(0.0, 1.0, 1).unwrap();
    let m = |r: ReactionSpec, v: f64, a: f64, b: f64| ModelSpec::from_dirichlet(&g, r, Coef::linear(v, 0.3), BoundaryValues::new(a, b)).unwrap();
    vec![
        ("power", m(ReactionSpec::power(1.0, 0.0, 1.0), 0.0, 1.0, 1.0), 0.2, 1.5, 0.7),
        ("power", m(ReactionSpec::power(1.5, 1.0, 0.5), -0.2, 0.8, 1.6), 0.1, 0.6, 1.2),
        ("log", m(ReactionSpec::log(1.0, 0.5), 0.1, 1.2, 0.9), 0.3, 0.9, 1.8),
        ("log", m(ReactionSpec::log(0.7, 0.0), 0.0, 0.6, 0.6), 0.05, 2.0, 0.4),
        ("signed-power", m(ReactionSpec::signed_power(1.0, 0.5, 0.3), 0.2, 1.1, 0.7), 0.25, 1.0, 1.0),
        ("signed-power", m(ReactionSpec::signed_power(0.8, 0.3, 0.0), -0.4, 1.4, 1.4), 0.15, 0.5, 1.5),
    ]
}

// Oracle values computed once by `fixed_oracle` / `jko_oracle` and frozen.
const FIXED: [f64; 6] = [
    4.733971605028434e-1,
    4.0768910472598e-1,
    -4.240246914875512e-3,
    3.123484160215989e0,
    0.0,
    5.742163837498437e-1,
];
const JKO: [f64; 6] = [
    3.171213802559668e-1,
    6.343997580565208e-2,
    1.884521735539006e-1,
    6.780316095353508e-1,
    3.487340398006686e-1,
    -2.797877397898252e-2,
];

#[test]
fn one_cell_values() {
    let g = build_grid(0.0, 1.0, 1).unwrap();
    let opts = SolverOptions::default();
    for (k, (label, spec, tau, mu, rho)) in cases().into_iter().enumerate() {
        let (fo, jo) = (fixed_oracle(&spec, tau, mu, rho), jko_oracle(&spec, tau, mu));
        let m = Density::from_density(&g, &[mu]);
        let r = Density::from_density(&g, &[rho]);
        let fixed = solve_with_init(&g, &spec, tau, &m, Some(&r), &opts, None).unwrap();
        let jko = solve_with_init(&g, &spec, tau, &m, None, &opts, None).unwrap();
        assert!(fixed.convergence.converged && jko.convergence.converged, "{label}");
        assert!((fixed.primal_value - fo).abs() <= 1e-8, "{k} {label}: {} vs {fo}", fixed.primal_value);
        assert!((jko.objective - jo).abs() <= 1e-8, "{k} {label}: {} vs {jo}", jko.objective);
        assert!((fo - FIXED[k]).abs() <= 1e-10, "{k} {label}: frozen {} vs {fo}", FIXED[k]);
        assert!((jo - JKO[k]).abs() <= 1e-10, "{k} {label}: frozen {} vs {jo}", JKO[k]);
    }
}


#[test]
fn fd_tracks_exact_relaxation_mode() {
    let exact = |t: f64, x: f64| 1.0 + 0.3 * (-(PI * PI + 1.0) * t).exp() * (PI * x).sin();
    let mut errs = Vec::new();
    for n in [16, 32] {
        let g = build_grid(0.0, 1.0, n).unwrap();
        let sol = solve_fd(&g, &linear_relaxation(&g), &sine_bump(&g, 0.3), 0.5, 1e-5).unwrap();
        let last = sol.values.last().unwrap();
        let err = g.cell_centers.iter().zip(last).map(|(&x, r)| (r - exact(0.5, x)).abs()).fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[1] <= 1e-5, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}

#[test]
fn trajectory_snapshots_and_energy_ledger() {
    let g = build_grid(0.0, 1.0, 12).unwrap();
    let spec = linear_relaxation(&g);
    let rho0 = Density::from_density(&g, &sine_bump(&g, 0.4));
    let opts = SolverOptions::default();
    let traj = run_minimizing_movement(&g, &spec, &rho0, 0.07, 0.5, &opts).unwrap();
    assert_eq!(traj.len(), (0.5f64 / 0.07).ceil() as usize + 1);
    assert_eq!(traj.snapshots[0].rho, rho0);
    for e in energy_ledger(&traj, &g, &spec, &opts).unwrap() {
        assert!(e.slack >= -1e-9, "{e:?}");
        assert!(e.self_cost.abs() <= 1e-9, "{e:?}");
    }
    let c = fit_energy_constant(&[&traj]);
    assert!(c.is_finite() && c > 0.0);
    let t = telescoping_check(&traj, &g, &spec, c);
    assert!(t.holds, "{t:?}");
}

#[test]
fn emptied_columns_are_certified() {
    let g = build_grid(0.0, 1.0, 6).unwrap();
    let spec = ModelSpec::from_dirichlet(&g, ReactionSpec::log(0.5, 0.8), Coef::linear(-0.39, -0.93), BoundaryValues::new(0.5, 1.1)).unwrap();
    let mu = Density::from_density(&g, &[0.2, 1.12, 0.2, 0.46, 0.2, 0.2]);
    let rho = Density::from_density(&g, &[0.2, 0.2, 0.2, 0.2, 0.2, 1.34]);
    let tau = 0.334;
    let sol = solve_with_init(&g, &spec, tau, &mu, Some(&rho), &SolverOptions::default(), None).unwrap();
    assert!(sol.convergence.polished, "{:?}", sol.warnings);
    assert!(sol.convergence.marginal_residual <= 1e-12);
    assert!(sol.convergence.duality_gap.abs() <= 1e-12);
    let cols = sol.col_sums();
    for j in 0..5 {
        assert!(cols[j] <= 1e-15, "{cols:?}");
        assert!((sol.h[j] + 0.2 / tau).abs() <= 1e-12);
    }
}

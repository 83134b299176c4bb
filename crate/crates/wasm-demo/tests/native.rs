use wbflow_wasm_demo::{comparison, projections, single_step};

#[test]
fn stationary_comparison_is_exact() {
    let c = comparison(8, 0.1, 0.5, 1.0, 0.0, "power").unwrap();
    assert_eq!(c.steps(), 5);
    assert_eq!(c.x().len(), 8);
    assert!(c.distance() <= 1e-12);
    assert!(c.jko().iter().chain(c.fd().iter()).all(|r| (r - 1.0).abs() <= 1e-9));
}

#[test]
fn both_profiles_decay_toward_equilibrium() {
    let c = comparison(16, 0.05, 0.5, 1.0, 0.3, "power").unwrap();
    assert!(c.distance() > 0.0 && c.distance().is_finite());
    let dev = |v: Vec<f64>| v.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    assert!(dev(c.jko()) < 0.3);
    // Leading mode of ρ_t = ρ_xx − (ρ − 1) after 100 implicit Euler steps of 0.005.
    let lambda = std::f64::consts::PI.powi(2) + 1.0;
    let mode = 0.3 * (1.0 + lambda * 0.005f64).powi(-100);
    assert!((dev(c.fd()) - mode).abs() <= 0.03 * mode, "{} vs {mode}", dev(c.fd()));
}

#[test]
fn projections_match_nearest_without_weights() {
    let rows = projections(0.0, 0.0, 0.1, 21).unwrap();
    assert_eq!(rows.len(), 4 * 21);
    for r in rows.chunks(4) {
        assert_eq!(r[1], if r[0] <= 0.5 { 0.0 } else { 1.0 });
        assert_eq!(r[2], r[1]);
        assert_eq!(r[3], r[1]);
    }
}

#[test]
fn weights_shift_the_projection() {
    let rows = projections(0.0, 2.0, 0.5, 11).unwrap();
    let mid = &rows[4 * 5..4 * 6];
    assert_eq!(mid[0], 0.5);
    assert_eq!(mid[2], 0.0);
    assert_eq!(mid[3], 1.0);
}

#[test]
fn single_step_plan_is_feasible() {
    let s = single_step(6, 0.1, 0.5, 0.2, 1.0, "log").unwrap();
    let nn = s.nodes();
    assert_eq!(nn, 8);
    let plan = s.plan();
    assert_eq!(plan.len(), nn * nn);
    assert!(plan.iter().all(|&m| m >= 0.0));
    assert_eq!(plan[6 * nn + 7], 0.0);
    assert_eq!(plan[7 * nn + 6], 0.0);
    assert!(s.boundary_flux() > 0.0);
    assert_eq!(s.rho().len(), 6);
    assert_eq!(s.h().len(), 6);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(single_step(4, -0.1, 1.0, 0.0, 1.0, "power").is_err());
    assert!(comparison(4, 0.1, 0.5, 1.0, 0.0, "cubic").is_err());
    assert!(projections(0.0, 0.0, 0.0, 5).is_err());
}

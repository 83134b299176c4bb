use proptest::prelude::*;
use wbflow::grid::{nearest_boundary_projection, projection_gap_check, weighted_boundary_projection, BoundaryValues, Sign};
use wbflow::model::{entropy_density, entropy_eval, psi_from_dirichlet, Coef};
use wbflow::pde::{series_distance, thomas, FDSolution, TestFunction};
use wbflow::transport::{solve_with_init, DualState};
use wbflow::{build_grid, Density, ModelSpec, ReactionSpec, SolverOptions};

fn reaction() -> impl Strategy<Value = ReactionSpec> {
    prop_oneof![
        (0.5..2.0f64, 0.0..2.0f64, 0.2..2.0f64).prop_map(|(w, b, q)| ReactionSpec::power(w, b, q)),
        (0.5..2.0f64, 0.0..1.5f64).prop_map(|(w, q)| ReactionSpec::log(w, q)),
        (0.5..2.0f64, 0.2..0.8f64, 0.0..1.0f64).prop_map(|(w, a, q)| ReactionSpec::signed_power(w, a, q)),
    ]
}

fn model(n: usize) -> impl Strategy<Value = ModelSpec> {
    (reaction(), -1.0..1.0f64, -1.0..1.0f64, 0.5..2.0f64, 0.5..2.0f64).prop_map(move |(r, v0, v1, a, b)| {
        let g = build_grid(0.0, 1.0, n).unwrap();
        ModelSpec::from_dirichlet(&g, r, Coef::linear(v0, v1), BoundaryValues::new(a, b)).unwrap()
    })
}

proptest! {
    #[test]
    fn unweighted_projection_is_nearest(x in 0.0..1.0f64, tau in 0.01..1.0f64, n in 1usize..20) {
        let g = build_grid(0.0, 1.0, n).unwrap();
        let zero = BoundaryValues::constant(0.0);
        let p = nearest_boundary_projection(&g, x).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let w = weighted_boundary_projection(&g, x, &zero, tau, sign).unwrap();
            prop_assert_eq!(w.point, p.point);
            prop_assert_eq!(w.side, p.side);
        }
        prop_assert!((p.value - (x - 0.0).min(1.0 - x)).abs() <= 1e-15);
    }

    #[test]
    fn weighted_projection_value_is_two_point_minimum(x in -1.0..2.0f64, tau in 0.01..1.0f64, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let g = build_grid(-1.0, 2.0, 6).unwrap();
        let psi = BoundaryValues::new(a, b);
        for (sign, s) in [(Sign::Plus, 1.0), (Sign::Minus, -1.0)] {
            let w = weighted_boundary_projection(&g, x, &psi, tau, sign).unwrap();
            let lo = (x + 1.0).powi(2) / (2.0 * tau) + s * a;
            let hi = (2.0 - x).powi(2) / (2.0 * tau) + s * b;
            prop_assert_eq!(w.value, lo.min(hi));
            prop_assert_eq!(w.point, if lo <= hi { -1.0 } else { 2.0 });
        }
    }

    #[test]
    fn projection_gap_within_bound(tau in 0.001..0.5f64, a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let g = build_grid(0.0, 1.0, 8).unwrap();
        let samples: Vec<f64> = (0..=2000).map(|k| k as f64 / 2000.0).collect();
        let rep = projection_gap_check(&g, &BoundaryValues::new(a, b), tau, &samples).unwrap();
        prop_assert!(rep.pass, "{rep:?}");
        prop_assert!(rep.samples_used > 0);
    }

    #[test]
    fn construction_identity(spec in model(4), r in 0.05..5.0f64, x in 0.0..1.0f64) {
        let z = spec.reaction().f_prime(r, x);
        prop_assert!((spec.e_prime(z, x) - (r.ln() + spec.v_at(x))).abs() <= 1e-8);
    }

    #[test]
    fn e_prime_round_trips(spec in model(4), p in -4.0..4.0f64, x in 0.0..1.0f64) {
        let z = spec.e_prime_inverse(p, x);
        prop_assert!((spec.e_prime(z, x) - p).abs() <= 1e-9 * (1.0 + p.abs()));
        if z > spec.domain_lower(x) + 1e-6 {
            prop_assert!((spec.e_prime_inverse(spec.e_prime(z, x), x) - z).abs() <= 1e-8 * (1.0 + z.abs()));
        }
    }

    #[test]
    fn e_is_midpoint_convex(spec in model(4), p in -3.0..3.0f64, q in -3.0..3.0f64, x in 0.0..1.0f64) {
        let (a, b) = (spec.e_prime_inverse(p, x), spec.e_prime_inverse(q, x));
        let mid = spec.e(0.5 * (a + b), x);
        let chord = 0.5 * (spec.e(a, x) + spec.e(b, x));
        prop_assert!(mid <= chord + 1e-9 * (1.0 + chord.abs()));
    }

    #[test]
    fn e_below_domain_is_infinite(w in 0.5..2.0f64, b in 0.0..2.0f64, q in 0.2..2.0f64, d in 1e-6..5.0f64) {
        let g = build_grid(0.0, 1.0, 4).unwrap();
        let spec = ModelSpec::from_dirichlet(&g, ReactionSpec::power(w, b, q), Coef::constant(0.0), BoundaryValues::constant(1.0)).unwrap();
        prop_assert_eq!(spec.e(spec.domain_lower(0.5) - d, 0.5), f64::INFINITY);
    }

    #[test]
    fn entropy_minimum(v in -2.0..2.0f64, z in 1e-6..10.0f64) {
        let min = entropy_density((-v).exp(), v);
        prop_assert!((min - (1.0 - (-v).exp())).abs() <= 1e-12);
        prop_assert!(entropy_density(z, v) >= min - 1e-12);
    }

    #[test]
    fn entropy_nonnegative_for_nonnegative_drift(rho in prop::collection::vec(0.01..3.0f64, 1..12), v0 in 0.0..1.0f64) {
        let g = build_grid(0.0, 1.0, rho.len()).unwrap();
        let spec = ModelSpec::from_dirichlet(&g, ReactionSpec::log(1.0, 0.0), Coef::linear(v0, 0.5), BoundaryValues::constant(1.0)).unwrap();
        prop_assert!(entropy_eval(&spec, &g, &Density::from_density(&g, &rho)).unwrap() >= 0.0);
    }

    #[test]
    fn psi_reproduces_dirichlet_data(a in 0.1..5.0f64, b in 0.1..5.0f64, v0 in -2.0..2.0f64, v1 in -2.0..2.0f64) {
        let v = Coef::linear(v0, v1);
        let psi = psi_from_dirichlet(&BoundaryValues::new(a, b), &v, -1.0, 3.0).unwrap();
        prop_assert!(((psi.lower - v.at(-1.0)).exp() - a).abs() <= 1e-12 * a);
        prop_assert!(((psi.upper - v.at(3.0)).exp() - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn thomas_solves_diagonally_dominant_systems(
        d in prop::collection::vec(3.0..5.0f64, 2..30),
        seed in prop::collection::vec(-1.0..1.0f64, 90),
    ) {
        let n = d.len();
        let lower: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { seed[i] }).collect();
        let upper: Vec<f64> = (0..n).map(|i| if i + 1 == n { 0.0 } else { seed[30 + i] }).collect();
        let rhs: Vec<f64> = seed[60..60 + n].to_vec();
        let x = thomas(&lower, &d, &upper, &rhs).unwrap();
        for i in 0..n {
            let mut s = d[i] * x[i];
            if i > 0 { s += lower[i] * x[i - 1]; }
            if i + 1 < n { s += upper[i] * x[i + 1]; }
            prop_assert!((s - rhs[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn bumps_are_admissible_when_inside(c in 0.3..0.7f64, r in 0.05..0.2f64) {
        let g = build_grid(0.0, 1.0, 32).unwrap();
        let z = TestFunction { center: c, radius: r };
        prop_assert!(z.is_admissible(&g));
        prop_assert_eq!(z.value(c + 1.001 * r), 0.0);
        prop_assert!(z.value(c + r) <= 1e-30);
        prop_assert!(z.value(c) > 0.0);
    }

    #[test]
    fn series_distance_is_a_metric_on_samples(
        a in prop::collection::vec(0.1..2.0f64, 24),
        b in prop::collection::vec(0.1..2.0f64, 24),
    ) {
        let g = build_grid(0.0, 1.0, 6).unwrap();
        let series = |v: &[f64]| FDSolution {
            grid: g.clone(),
            times: vec![0.0, 0.25, 0.5, 0.75],
            values: v.chunks(6).map(|c| c.to_vec()).collect(),
            boundary: BoundaryValues::constant(1.0),
        };
        let (sa, sb) = (series(&a), series(&b));
        let dab = series_distance(&sa, &sb, 1.0).unwrap();
        let dba = series_distance(&sb, &sa, 1.0).unwrap();
        prop_assert!(dab >= 0.0);
        prop_assert!((dab - dba).abs() <= 1e-15);
        prop_assert_eq!(series_distance(&sa, &sa, 1.0).unwrap(), 0.0);
        let differs_inside = a.chunks(6).zip(b.chunks(6)).any(|(x, y)| x[1..5] != y[1..5]);
        prop_assert_eq!(dab > 0.0, differs_inside);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plans_are_feasible(
        spec in model(6),
        mu in prop::collection::vec(0.2..2.0f64, 6),
        rho in prop::collection::vec(0.2..2.0f64, 6),
        tau in 0.02..0.5f64,
        jko in any::<bool>(),
    ) {
        let g = build_grid(0.0, 1.0, 6).unwrap();
        let mu = Density::from_density(&g, &mu);
        let rho = Density::from_density(&g, &rho);
        let sol = solve_with_init(&g, &spec, tau, &mu, (!jko).then_some(&rho), &SolverOptions::default(), None).unwrap();
        prop_assert!(sol.convergence.converged);
        prop_assert!(sol.gamma.iter().all(|&m| m >= 0.0));
        let nn = g.n_nodes();
        for i in 6..nn {
            for j in 6..nn {
                prop_assert_eq!(sol.gamma(i, j), 0.0);
            }
        }
        let rows = sol.row_sums();
        let cols = sol.col_sums();
        for i in 0..6 {
            prop_assert!((rows[i] - mu.cell_mass[i]).abs() <= 1e-8 * sol.total_mass());
            prop_assert!((cols[i] - (sol.rho[i] + tau * sol.h[i]) * g.dx).abs() <= 1e-8 * sol.total_mass());
        }
        prop_assert!(sol.convergence.max_dual_violation <= 1e-8);
    }

    #[test]
    fn creation_is_unique_across_initializations(
        spec in model(5),
        mu in prop::collection::vec(0.2..2.0f64, 5),
        shift in prop::collection::vec(-1.0..1.0f64, 10),
        tau in 0.02..0.5f64,
    ) {
        let g = build_grid(0.0, 1.0, 5).unwrap();
        let mu = Density::from_density(&g, &mu);
        let opts = SolverOptions::default();
        let a = solve_with_init(&g, &spec, tau, &mu, None, &opts, None).unwrap();
        let init = DualState { f: shift[..5].to_vec(), g: shift[5..].to_vec() };
        let b = solve_with_init(&g, &spec, tau, &mu, None, &opts, Some(&init)).unwrap();
        for (x, y) in a.h.iter().zip(&b.h) {
            prop_assert!((x - y).abs() <= 1e-6, "{:?} vs {:?}", a.h, b.h);
        }
    }
}

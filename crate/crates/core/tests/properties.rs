use std::f64::consts::PI;

use edgeflow_core::grid::{l2_inner, v2_inner};
use edgeflow_core::model::g_eval;
use edgeflow_core::operators::{div_g_grad, operator_a};
use edgeflow_core::solver::{run, SolverConfig};
use edgeflow_core::{Diffusivity, DiffusivityParams, GridSpec, LambdaField, ModelConfig, ScalarField};
use proptest::prelude::*;

fn field(spec: GridSpec, values: &[f64]) -> ScalarField {
    ScalarField::from_values(spec, values[..spec.len()].to_vec()).unwrap()
}

fn params() -> impl Strategy<Value = DiffusivityParams> {
    (0.1f64..5.0, 0.1f64..5.0, 0.1f64..500.0, 1.0f64..=2.0)
        .prop_map(|(a, b, c, d)| DiffusivityParams::new(a, b, c, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn g_is_positive_bounded_and_decreasing_in_abs(p in params(), s in -50.0f64..50.0, t in 0.0f64..50.0) {
        let g = g_eval(&p, s);
        prop_assert!(g > 0.0);
        prop_assert!(g <= p.a / p.b * (1.0 + 1e-15));
        prop_assert_eq!(g, g_eval(&p, -s));
        let (lo, hi) = if s.abs() <= t { (s.abs(), t) } else { (t, s.abs()) };
        prop_assert!(g_eval(&p, lo) >= g_eval(&p, hi));
    }

    #[test]
    fn div_g_grad_is_symmetric_and_nonpositive(
        nx in 3usize..8,
        ny in 3usize..8,
        g in prop::collection::vec(0.01f64..10.0, 64),
        u in prop::collection::vec(-1.0f64..1.0, 64),
        w in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        let spec = GridSpec::new(nx, ny, 1.0, 1.3).unwrap();
        let (g, u, w) = (field(spec, &g), field(spec, &u), field(spec, &w));
        let uw = l2_inner(&div_g_grad(&u, &g).unwrap(), &w).unwrap();
        let wu = l2_inner(&div_g_grad(&w, &g).unwrap(), &u).unwrap();
        prop_assert!((uw - wu).abs() <= 1e-10 * (1.0 + uw.abs()));
        prop_assert!(l2_inner(&div_g_grad(&u, &g).unwrap(), &u).unwrap() <= 1e-12);
    }

    #[test]
    fn v2_inner_is_the_operator_a_pairing(
        n in 3usize..9,
        u in prop::collection::vec(-1.0f64..1.0, 81),
        w in prop::collection::vec(-1.0f64..1.0, 81),
    ) {
        let spec = GridSpec::unit_square(n).unwrap();
        let (u, w) = (field(spec, &u), field(spec, &w));
        let lhs = v2_inner(&u, &w).unwrap();
        let rhs = l2_inner(&operator_a(&u).unwrap(), &w).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        prop_assert!(v2_inner(&u, &u).unwrap() >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energy_estimate_holds_for_random_models(
        p in params(),
        lambda in 0.05f64..1.0,
        eps in prop_oneof![Just(0.0), 1e-4f64..1e-2],
        delta in 0.0f64..=1.0,
        dt in 1e-3f64..0.05,
        n in 5usize..12,
        amp in 0.1f64..3.0,
    ) {
        let spec = GridSpec::unit_square(n).unwrap();
        let u0 = ScalarField::from_fn(spec, |x, y| amp * (PI * x).sin() * (3.0 * PI * y).sin() + (x - 0.5) * y * (1.0 - y));
        let v0 = ScalarField::from_fn(spec, |x, y| x * (1.0 - x) * y * (1.0 - y));
        let model = ModelConfig::target(Diffusivity::Rational(p), LambdaField::constant(spec, lambda).unwrap())
            .with_epsilon(eps)
            .with_delta(delta);
        let traj = run(&u0, &v0, 5.0 * dt, &model, &SolverConfig::default().with_dt(dt)).unwrap();
        for e in traj.energy_checks() {
            prop_assert!(e.energy <= e.energy_bound + 1e-10 * (1.0 + e.energy_bound), "{:?}", e);
            prop_assert!(e.phi_integral + 1e-8 >= e.phi_lower);
            prop_assert!(e.phi_integral <= e.phi_upper + 1e-8);
        }
    }

    #[test]
    fn constant_lambda_keeps_v_nonnegative(
        p in params(),
        lambda in 0.05f64..1.0,
        delta in 0.0f64..=1.0,
        dt in 1e-3f64..0.1,
        n in 5usize..12,
        amp in 0.1f64..5.0,
    ) {
        let spec = GridSpec::unit_square(n).unwrap();
        let u0 = ScalarField::from_fn(spec, |x, y| amp * (2.0 * PI * x).sin() * (PI * y).sin());
        let v0 = ScalarField::zeros(spec);
        let model = ModelConfig::target(Diffusivity::Rational(p), LambdaField::constant(spec, lambda).unwrap())
            .with_delta(delta);
        let traj = run(&u0, &v0, 4.0 * dt, &model, &SolverConfig::default().with_dt(dt)).unwrap();
        for d in &traj.diagnostics {
            prop_assert!(d.v_min >= -1e-12, "{}", d.v_min);
        }
    }
}

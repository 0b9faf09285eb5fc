//! Functional inequalities measured on discrete fields.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{h1_seminorm, l2_norm, linf_norm, v2_norm, ScalarField};

/// The constant in `||f^2|| <= sqrt(2) ||f|| ||grad f||`.
pub const LADYZHENSKAYA: f64 = core::f64::consts::SQRT_2;

/// `||f^2|| / (||f|| ||grad f||)`; zero for the zero field.
pub fn ladyzhenskaya_check(f: &ScalarField) -> f64 {
    let (a, b) = (l2_norm(f), h1_seminorm(f));
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    l2_norm(&f.map(|x| x * x)) / (a * b)
}

/// `max ||f||_inf / ||f||_2` over nonzero samples, `||.||_2` the discrete H^2 norm.
pub fn sobolev_constant_estimate(samples: &[ScalarField]) -> Result<f64> {
    let mut best: Option<f64> = None;
    for f in samples {
        let d = v2_norm(f);
        if d > 0.0 {
            let r = linf_norm(f) / d;
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no nonzero samples".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use alloc::vec::Vec;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_field_ratio_is_zero() {
        assert_eq!(ladyzhenskaya_check(&ScalarField::zeros(GridSpec::unit_square(5).unwrap())), 0.0);
        assert!(sobolev_constant_estimate(&[ScalarField::zeros(GridSpec::unit_square(5).unwrap())]).is_err());
    }

    #[test]
    fn eigenmode_ratio_matches_quadrature() {
        // ||f^2|| = 3/8, ||f|| = 1/2, ||grad f|| = pi / sqrt 2
        let exact = 0.375 / (0.5 * PI / 2f64.sqrt());
        let spec = GridSpec::unit_square(127).unwrap();
        let f = ScalarField::from_fn(spec, |x, y| (PI * x).sin() * (PI * y).sin());
        assert!((ladyzhenskaya_check(&f) - exact).abs() < 1e-3);
        let c = sobolev_constant_estimate(&[f]).unwrap();
        let exact_c = 1.0 / (PI * PI / 2.0 + PI.powi(4)).sqrt();
        assert!((c - exact_c).abs() < 1e-3 * exact_c);
    }

    #[test]
    fn random_smooth_fields_respect_the_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = GridSpec::unit_square(31).unwrap();
        for _ in 0..50 {
            let coeffs: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = ScalarField::from_fn(spec, |x, y| {
                let mut s = 0.0;
                for k in 0..4 {
                    for l in 0..4 {
                        s += coeffs[4 * k + l] * ((k + 1) as f64 * PI * x).sin() * ((l + 1) as f64 * PI * y).sin()
                            / ((k + l + 1) as f64);
                    }
                }
                s
            });
            assert!(ladyzhenskaya_check(&f) <= LADYZHENSKAYA * 1.1);
        }
    }

    #[test]
    fn sobolev_estimate_is_grid_stable() {
        let sample = |n| {
            let spec = GridSpec::unit_square(n).unwrap();
            let fields = [
                ScalarField::from_fn(spec, |x, y| (PI * x).sin() * (PI * y).sin()),
                ScalarField::from_fn(spec, |x, y| x * (1.0 - x) * y * (1.0 - y)),
                ScalarField::from_fn(spec, |x, y| (PI * x).sin() * (2.0 * PI * y).sin()),
            ];
            sobolev_constant_estimate(&fields).unwrap()
        };
        let (a, b) = (sample(31), sample(63));
        assert!((a - b).abs() <= 0.1 * b, "{a} {b}");
    }
}

use std::f64::consts::PI;

use ehz_core::{capacity, Body, FourierLoop, SolveConfig, SymplecticContext};
use proptest::prelude::*;

fn cfg() -> SolveConfig {
    SolveConfig {
        modes: 8,
        starts: 3,
        ..SolveConfig::default()
    }
}

fn cap(b: &Body) -> f64 {
    cap_with(b, &cfg())
}

fn cap_with(b: &Body, cfg: &SolveConfig) -> f64 {
    let r = capacity(b, cfg).unwrap();
    assert!(r.converged);
    r.capacity
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn ellipsoid_capacity_is_smallest_disc(radii in prop::collection::vec(0.5f64..2.0, 2)) {
        let radii = sorted(radii);
        let c = cap(&Body::ellipsoid(&radii).unwrap());
        let exact = PI * radii[0] * radii[0];
        prop_assert!((c - exact).abs() < 1e-7 * exact, "{} vs {}", c, exact);
    }

    #[test]
    fn capacity_scales_quadratically(r in 0.3f64..3.0, seed in 0u64..1000) {
        let m = SymplecticContext::new(2).random_symplectic(seed, 0.3);
        let k = Body::linear(m, Body::ellipsoid(&[1.0, 1.7]).unwrap()).unwrap();
        let base = cap(&k);
        let scaled = cap(&Body::scale(r, k).unwrap());
        prop_assert!((scaled - r * r * base).abs() < 1e-6 * scaled);
    }

    #[test]
    fn symplectic_and_translation_invariance(seed in 0u64..1000, shift in prop::collection::vec(-0.2f64..0.2, 4)) {
        let k = Body::psum(3.0, vec![
            Body::ball(4, 1.0).unwrap(),
            Body::ellipsoid(&[0.5, 1.2]).unwrap(),
        ]).unwrap();
        // Sheared images need more modes than the base body.
        let fine = SolveConfig { modes: 16, ..cfg() };
        let base = cap_with(&k, &fine);
        let m = SymplecticContext::new(2).random_symplectic(seed, 0.4);
        let moved = Body::translate(shift, Body::linear(m, k).unwrap()).unwrap();
        let c = cap_with(&moved, &fine);
        prop_assert!((c - base).abs() < 1e-5 * base, "{} vs {}", c, base);
    }

    #[test]
    fn capacity_is_monotone(a in 0.5f64..1.5, b in 0.5f64..1.5, da in 0.0f64..0.5, db in 0.0f64..0.5) {
        let small = Body::psum(2.0, vec![Body::ellipsoid(&sorted(vec![a, b])).unwrap(), Body::ball(4, 0.3).unwrap()]).unwrap();
        let large = Body::psum(2.0, vec![Body::ellipsoid(&sorted(vec![a + da, b + db])).unwrap(), Body::ball(4, 0.3).unwrap()]).unwrap();
        prop_assert!(cap(&small) <= cap(&large) * (1.0 + 1e-8));
    }

    #[test]
    fn loop_action_invariances(
        coeffs in prop::collection::vec(-1.0f64..1.0, 4 * 2 * 5),
        tau in 0.0f64..6.3,
        seed in 0u64..1000,
    ) {
        let z = FourierLoop::from_flat(4, 5, &coeffs);
        let a = z.action();
        let tol = 1e-10 * (1.0 + z.coefficient_norm().powi(2));
        prop_assert!((z.action_by_quadrature(32).unwrap() - a).abs() < tol);
        prop_assert!((z.phase_shifted(tau).action() - a).abs() < tol);
        prop_assert!((z.time_reversed().action() + a).abs() < tol);
        prop_assert!((z.scaled(2.0).action() - 4.0 * a).abs() < 4.0 * tol);
        let m = SymplecticContext::new(2).random_symplectic(seed, 0.5);
        let mapped = z.mapped(&m).unwrap();
        prop_assert!((mapped.action() - a).abs() < 1e3 * tol, "{} vs {}", mapped.action(), a);
    }
}

use super::*;
use crate::linalg::sub;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn random_spd(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(dim, dim) * 0.5
}

fn square() -> Body {
    Body::polytope(&[vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]]).unwrap()
}

fn cross_polytope(dim: usize, r: f64) -> Body {
    let mut v = Vec::new();
    for i in 0..dim {
        for s in [-r, r] {
            let mut e = vec![0.0; dim];
            e[i] = s;
            v.push(e);
        }
    }
    Body::polytope(&v).unwrap()
}

/// A zoo of smooth bodies in R^4 used by the invariant tests.
fn smooth_zoo() -> Vec<Body> {
    let ell = Body::ellipsoid(&[1.0, 2.0]).unwrap();
    let gen = Body::general_ellipsoid(random_spd(4, 3)).unwrap();
    let ctx = crate::symplectic::SymplecticContext::new(2);
    vec![
        Body::ball(4, 1.5).unwrap(),
        ell.clone(),
        gen.clone(),
        Body::psum(2.0, vec![Body::ball(4, 1.0).unwrap(), ell.clone()]).unwrap(),
        Body::psum(3.0, vec![gen.clone(), ell.clone()]).unwrap(),
        Body::minkowski(vec![gen, ell.clone()], Some(vec![0.5, 1.5])).unwrap(),
        Body::linear(ctx.random_symplectic(5, 0.3), ell.clone()).unwrap(),
        Body::translate(vec![0.2, -0.1, 0.3, 0.0], ell.clone()).unwrap(),
        Body::scale(0.7, ell).unwrap(),
        Body::smoothed(16.0, cross_polytope(4, 1.0)).unwrap(),
    ]
}

#[test]
fn ball_support_example() {
    let b = Body::ball(4, 2.0).unwrap();
    let s = b.support(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    assert_eq!(s.value, 2.0);
    assert_eq!(s.gradient, vec![2.0, 0.0, 0.0, 0.0]);
    assert!(s.smooth);
}

#[test]
fn ellipsoid_support_example() {
    let e = Body::ellipsoid(&[1.0, 2.0]).unwrap();
    let s = e.support(&[0.0, 0.0, 1.0, 0.0]).unwrap();
    assert_eq!(s.value, 2.0);
    assert_eq!(s.gradient, vec![0.0, 0.0, 2.0, 0.0]);
}

#[test]
fn general_ellipsoid_gradient_matches_differences() {
    let q = random_spd(4, 7);
    let e = Body::general_ellipsoid(q.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let u: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = e.support(&u).unwrap();
        let qu = &q * nalgebra::DVector::from_column_slice(&u);
        let direct = qu.dot(&nalgebra::DVector::from_column_slice(&u)).sqrt();
        assert!(close(s.value, direct, 1e-13));
        for i in 0..4 {
            let step = 1e-6;
            let mut up = u.clone();
            let mut um = u.clone();
            up[i] += step;
            um[i] -= step;
            let fd = (e.h(&up) - e.h(&um)) / (2.0 * step);
            assert!((fd - s.gradient[i]).abs() <= 1e-6 * s.gradient[i].abs().max(1.0));
        }
    }
}

#[test]
fn zero_direction_and_dimension_errors() {
    let b = Body::ball(2, 1.0).unwrap();
    assert!(matches!(b.support(&[0.0, 0.0]), Err(Error::ZeroDirection)));
    assert!(matches!(
        b.support(&[1.0, 0.0, 0.0]),
        Err(Error::DimensionMismatch {
            expected: 2,
            found: 3
        })
    ));
}

#[test]
fn construction_errors() {
    assert!(matches!(Body::ball(3, 1.0), Err(Error::OddDimension { .. })));
    assert!(matches!(Body::ball(2, -1.0), Err(Error::InvalidParameter { .. })));
    assert!(Body::ellipsoid(&[2.0, 1.0]).is_err());
    let not_spd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(matches!(
        Body::general_ellipsoid(not_spd),
        Err(Error::NotPositiveDefinite { .. })
    ));
    // Origin on an edge.
    let edge = Body::polytope(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert!(matches!(edge, Err(Error::OriginNotInterior { .. })));
    // Origin outside.
    let off = Body::polytope(&[vec![1.0, 1.0], vec![2.0, 1.0], vec![1.0, 2.0]]);
    assert!(matches!(off, Err(Error::OriginNotInterior { .. })));
    // Flat polytope.
    let flat = Body::polytope(&[vec![1.0, 0.0], vec![-1.0, 0.0]]);
    assert!(matches!(flat, Err(Error::OriginNotInterior { .. })));
    // Translate pushing the origin to the boundary.
    let t = Body::translate(vec![1.0, 0.0], Body::ball(2, 1.0).unwrap());
    assert!(matches!(t, Err(Error::OriginNotInterior { .. })));
    assert!(Body::smoothed(8.0, Body::ball(2, 1.0).unwrap()).is_err());
    let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    assert!(Body::linear(singular, Body::ball(2, 1.0).unwrap()).is_err());
}

#[test]
fn polytope_ties_are_flagged() {
    let sq = square();
    let s = sq.support(&[1.0, 0.0]).unwrap();
    assert_eq!(s.value, 1.0);
    assert!(!s.smooth);
    assert_eq!(s.gradient, vec![1.0, 1.0]);
    let s = sq.support(&[1.0, 0.5]).unwrap();
    assert!(s.smooth);
    assert_eq!(s.value, 1.5);
}

#[test]
fn smoothed_polytope_is_outer_and_converges() {
    let sq = square();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let u = [a.cos(), a.sin()];
        let h = sq.h(&u);
        let mut last = f64::INFINITY;
        for s in [4.0, 16.0, 64.0, 256.0] {
            let hs = Body::smoothed(s, sq.clone()).unwrap().h(&u);
            assert!(hs >= h - 1e-15 && hs <= last + 1e-15);
            // At most 4 active vertices, so the overshoot is below 4^{1/s}.
            assert!(hs <= h * 4f64.powf(1.0 / s) + 1e-15);
            last = hs;
        }
    }
}

#[test]
fn gauge_examples() {
    let b = Body::ball(4, 2.0).unwrap();
    let g = b.gauge(&[0.0, 1.0, 0.0, 0.0]).unwrap();
    assert!((g.value - 0.5).abs() < 1e-15);
    assert!(g.analytic);
    let e = Body::ellipsoid(&[1.0, 2.0]).unwrap();
    let g = e.gauge(&[0.0, 0.0, 2.0, 0.0]).unwrap();
    assert!((g.value - 1.0).abs() < 1e-15);
    assert_eq!(b.gauge(&[0.0; 4]).unwrap().value, 0.0);
    let g = square().gauge(&[0.5, 0.25]).unwrap();
    assert!((g.value - 0.5).abs() < 1e-9);
}

/// Maximizes `<x, u> / h(u)` over a coarse angular grid on S^3 followed by
/// coordinate-wise golden-section refinement of the three angles.
fn gauge_by_grid(body: &Body, x: &[f64]) -> f64 {
    let to_u = |a: &[f64; 3]| {
        let (s0, c0) = a[0].sin_cos();
        let (s1, c1) = a[1].sin_cos();
        let (s2, c2) = a[2].sin_cos();
        [c0, s0 * c1, s0 * s1 * c2, s0 * s1 * s2]
    };
    let ratio = |a: &[f64; 3]| {
        let u = to_u(a);
        dot(x, &u) / body.h(&u)
    };
    let pi = std::f64::consts::PI;
    let n = 40;
    let mut best = (f64::NEG_INFINITY, [0.0; 3]);
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..2 * n {
                let a = [
                    pi * i as f64 / n as f64,
                    pi * j as f64 / n as f64,
                    pi * k as f64 / n as f64,
                ];
                let r = ratio(&a);
                if r > best.0 {
                    best = (r, a);
                }
            }
        }
    }
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = best.1;
    let mut width = pi / n as f64;
    for _ in 0..12 {
        for c in 0..3 {
            let (mut lo, mut hi) = (a[c] - width, a[c] + width);
            for _ in 0..60 {
                let m1 = hi - phi * (hi - lo);
                let m2 = lo + phi * (hi - lo);
                let mut b1 = a;
                let mut b2 = a;
                b1[c] = m1;
                b2[c] = m2;
                if ratio(&b1) < ratio(&b2) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            a[c] = 0.5 * (lo + hi);
        }
        width *= 0.5;
    }
    ratio(&a).max(best.0)
}

#[test]
fn psum_gauge_matches_grid_search() {
    let b = Body::psum(
        2.0,
        vec![Body::ball(4, 1.0).unwrap(), Body::ball(4, 1.0).unwrap()],
    )
    .unwrap();
    let g = b.gauge(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    assert!((g.value - 0.5f64.sqrt()).abs() < 1e-9);
    let oracle = gauge_by_grid(&b, &[1.0, 0.0, 0.0, 0.0]);
    assert!((g.value - oracle).abs() < 1e-6);
    assert!(!g.analytic);
}

#[test]
fn iterative_gauge_matches_grid_search() {
    let b = Body::psum(
        3.0,
        vec![
            Body::ellipsoid(&[1.0, 2.0]).unwrap(),
            Body::general_ellipsoid(random_spd(4, 2)).unwrap(),
        ],
    )
    .unwrap();
    let x = [0.3, -0.7, 1.1, 0.4];
    let g = b.gauge(&x).unwrap();
    let oracle = gauge_by_grid(&b, &x);
    assert!(
        (g.value - oracle).abs() < 1e-6 * oracle,
        "{} vs {oracle}",
        g.value
    );
}

#[test]
fn gauge_of_linear_image_of_polytope() {
    let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
    let p = Body::linear(m.clone(), square()).unwrap();
    // Image of the vertex (1, 1) lies on the boundary.
    let g = p.gauge(&[3.0, 1.0]).unwrap();
    assert!((g.value - 1.0).abs() < 1e-9);
    let g = p.gauge(&[1.5, 0.5]).unwrap();
    assert!((g.value - 0.5).abs() < 1e-9);
}

#[test]
fn translated_quadric_gauge_is_closed_form() {
    let b = Body::translate(vec![0.5, 0.0], Body::ball(2, 1.0).unwrap()).unwrap();
    // Ray along +x exits at 1.5, along -x at 0.5.
    assert!((b.gauge(&[1.5, 0.0]).unwrap().value - 1.0).abs() < 1e-14);
    assert!((b.gauge(&[-1.0, 0.0]).unwrap().value - 2.0).abs() < 1e-14);
}

#[test]
fn invariants_on_zoo() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for body in smooth_zoo() {
        for _ in 0..40 {
            let u: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lambda = rng.random_range(0.1..5.0);
            let s = body.support(&u).unwrap();
            // Positive homogeneity.
            let lu: Vec<f64> = u.iter().map(|x| lambda * x).collect();
            assert!(close(body.h(&lu), lambda * s.value, 1e-12));
            // Subadditivity.
            let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            assert!(body.h(&uv) <= s.value + body.h(&v) + 1e-12);
            // Euler relation.
            assert!(close(dot(&s.gradient, &u), s.value, 1e-12));
            // The support point lies on the boundary.
            let g = body.gauge(&s.gradient).unwrap();
            assert!((g.value - 1.0).abs() < 1e-7, "{:?}: {}", body.kind(), g.value);
        }
    }
}

#[test]
fn minkowski_and_psum_rules() {
    let a = Body::ellipsoid(&[1.0, 2.0]).unwrap();
    let b = Body::general_ellipsoid(random_spd(4, 11)).unwrap();
    let m = Body::minkowski(vec![a.clone(), b.clone()], None).unwrap();
    let p1 = Body::psum(1.0, vec![a.clone(), b.clone()]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let u: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(close(m.h(&u), a.h(&u) + b.h(&u), 1e-13));
        assert!(close(p1.h(&u), m.h(&u), 1e-13));
        let gm = m.support(&u).unwrap().gradient;
        let gp = p1.support(&u).unwrap().gradient;
        assert!(sub(&gm, &gp).iter().all(|d| d.abs() < 1e-12));
    }
}

/// Support of the intersection of two planar disks by enumeration of the
/// candidate extreme points: each disk's own support point (if it lies in the
/// other disk) and the two corners of the lens.
fn lens_support(c1: [f64; 2], r1: f64, c2: [f64; 2], r2: f64, u: [f64; 2]) -> f64 {
    let inside = |p: [f64; 2], c: [f64; 2], r: f64| (p[0] - c[0]).hypot(p[1] - c[1]) <= r * (1.0 + 1e-12);
    let mut best = f64::NEG_INFINITY;
    let p1 = [c1[0] + r1 * u[0], c1[1] + r1 * u[1]];
    if inside(p1, c2, r2) {
        best = best.max(p1[0] * u[0] + p1[1] * u[1]);
    }
    let p2 = [c2[0] + r2 * u[0], c2[1] + r2 * u[1]];
    if inside(p2, c1, r1) {
        best = best.max(p2[0] * u[0] + p2[1] * u[1]);
    }
    let d = (c2[0] - c1[0]).hypot(c2[1] - c1[1]);
    let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let hgt = (r1 * r1 - a * a).sqrt();
    let e = [(c2[0] - c1[0]) / d, (c2[1] - c1[1]) / d];
    let m = [c1[0] + a * e[0], c1[1] + a * e[1]];
    for s in [-1.0, 1.0] {
        let q = [m[0] - s * hgt * e[1], m[1] + s * hgt * e[0]];
        best = best.max(q[0] * u[0] + q[1] * u[1]);
    }
    best
}

#[test]
fn intersection_of_identical_balls() {
    let b = Body::ball(4, 1.0).unwrap();
    let r = intersection_support(&b, &b, &[0.0, 1.0, 0.0, 0.0], 1e-10).unwrap();
    assert!((r.value - 1.0).abs() < 1e-12);
}

#[test]
fn intersection_of_disks_matches_lens_geometry() {
    let k = Body::ball(2, 1.0).unwrap();
    let t = Body::translate(vec![0.8, 0.0], Body::ball(2, 1.0).unwrap()).unwrap();
    for i in 0..64 {
        let a = std::f64::consts::TAU * (i as f64 + 0.3) / 64.0;
        let u = [a.cos(), a.sin()];
        let r = intersection_support(&k, &t, &u, 1e-9).unwrap();
        let oracle = lens_support([0.0, 0.0], 1.0, [0.8, 0.0], 1.0, u);
        assert!(
            (r.value - oracle).abs() < 1e-7,
            "angle {a}: {} vs {oracle}",
            r.value
        );
    }
    let r = intersection_support(&k, &t, &[1.0, 0.0], 1e-9).unwrap();
    assert!((r.value - 1.0).abs() < 1e-9);
}

#[test]
fn intersection_with_superset_is_identity() {
    let k = Body::ellipsoid(&[1.0, 2.0]).unwrap();
    let t = Body::ball(4, 3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let u: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = intersection_support(&k, &t, &u, 1e-10).unwrap();
        assert!(close(r.value, k.h(&u), 1e-10));
    }
}

#[test]
fn recipe_round_trip() {
    let json = r#"{"type": "psum", "p": 2, "terms": [
        {"type": "ball", "r": 1},
        {"type": "translate", "vector": [0.1, 0, 0, 0],
         "body": {"type": "ellipsoid", "radii": [1, 2]}}
    ]}"#;
    let b = Body::from_json(json).unwrap();
    assert_eq!(b.dim(), 4);
    let text = serde_json::to_string(&b.to_recipe()).unwrap();
    let again = Body::from_json(&text).unwrap();
    let u = [0.3, -0.2, 0.5, 0.9];
    assert_eq!(b.h(&u), again.h(&u));
}

#[test]
fn recipe_errors_name_their_field() {
    let err = Body::from_json(r#"{"type": "ball", "r": 1, "dim": 4, "colour": 1}"#).unwrap_err();
    assert!(err.to_string().contains("colour"), "{err}");
    let err = Body::from_json(r#"{"type": "ball", "r": 1}"#).unwrap_err();
    assert!(err.to_string().contains("dim"), "{err}");
    let err = Body::from_json(
        r#"{"type": "minkowski", "terms": [{"type": "ball", "r": 1, "dim": 4},
            {"type": "polytope", "vertices": [[1, 0, 0], [-1, 0, 0]]}]}"#,
    )
    .unwrap_err();
    match err {
        Error::OddDimension { field, dim } => {
            assert_eq!(field, "terms[1].vertices");
            assert_eq!(dim, 3);
        }
        other => panic!("unexpected {other}"),
    }
    let err = Body::from_json(r#"{"type": "ellipsoid", "radii": [1, -2]}"#).unwrap_err();
    assert!(err.to_string().contains("radii"), "{err}");
}

proptest! {
    #[test]
    fn homogeneity_and_subadditivity(
        u in prop::collection::vec(-2.0f64..2.0, 4),
        v in prop::collection::vec(-2.0f64..2.0, 4),
        lambda in 0.01f64..10.0,
        which in 0usize..10,
    ) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
        let body = &smooth_zoo()[which];
        let h = body.h(&u);
        let lu: Vec<f64> = u.iter().map(|x| lambda * x).collect();
        prop_assert!(close(body.h(&lu), lambda * h, 1e-12));
        let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        if uv.iter().any(|x| x.abs() > 1e-9) {
            prop_assert!(body.h(&uv) <= h + body.h(&v) + 1e-12);
        }
    }

    #[test]
    fn gauge_duality(u in prop::collection::vec(-2.0f64..2.0, 4), which in 0usize..10) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-2));
        let body = &smooth_zoo()[which];
        let s = body.support(&u).unwrap();
        let g = body.gauge(&s.gradient).unwrap();
        prop_assert!((g.value - 1.0).abs() < 1e-7);
        // Gauge is positively homogeneous of degree one.
        let g2 = body.gauge(&s.gradient.iter().map(|x| 2.5 * x).collect::<Vec<_>>()).unwrap();
        prop_assert!((g2.value - 2.5 * g.value).abs() < 1e-7);
    }
}

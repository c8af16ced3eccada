use super::*;
use crate::symplectic::SymplecticContext;
use rand::Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ball(dim: usize, r: f64) -> Body {
    Body::ball(dim, r).unwrap()
}

fn e12() -> Body {
    Body::ellipsoid(&[1.0, 2.0]).unwrap()
}

fn cfg(modes: usize) -> SolveConfig {
    SolveConfig {
        modes,
        ..SolveConfig::default()
    }
}

fn normalized_circle(dim: usize, modes: usize) -> FourierLoop {
    FourierLoop::circle(dim, modes, 0, 1.0 / PI.sqrt())
}

#[test]
fn conversion_identity() {
    for p in [1.5, 2.0, 3.0] {
        let l = lambda_from_capacity(PI, p);
        assert!(rel(capacity_from_lambda(l, p), PI) < 1e-15);
    }
    assert!(rel(lambda_from_capacity(PI, 3.0), 2.0 / PI.sqrt()) < 1e-15);
}

#[test]
fn objective_on_circles() {
    let z = normalized_circle(4, 4);
    let (v, _) = objective(&ball(4, 1.0), &z, 2.0, 16).unwrap();
    assert!((v - 2.0).abs() < 1e-14);
    let (v, _) = objective(&ball(4, 1.7), &z, 2.0, 16).unwrap();
    assert!((v - 2.0 * 1.7 * 1.7).abs() < 1e-13);
}

#[test]
fn objective_gradient_matches_differences() {
    let body = Body::psum(3.0, vec![e12(), ball(4, 0.8)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let flat: Vec<f64> = (0..2 * 4 * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let z = FourierLoop::from_flat(4, 3, &flat);
    for p in [1.5, 2.0, 3.0] {
        let (_, g) = objective(&body, &z, p, 12).unwrap();
        for i in 0..flat.len() {
            let step = 1e-6;
            let mut xp = flat.clone();
            let mut xm = flat.clone();
            xp[i] += step;
            xm[i] -= step;
            let fp = objective(&body, &FourierLoop::from_flat(4, 3, &xp), p, 12)
                .unwrap()
                .0;
            let fm = objective(&body, &FourierLoop::from_flat(4, 3, &xm), p, 12)
                .unwrap()
                .0;
            let fd = (fp - fm) / (2.0 * step);
            assert!(
                (fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1e-2),
                "p={p} i={i}: {fd} vs {}",
                g[i]
            );
        }
    }
}

#[test]
fn objective_rejects_raw_polytopes() {
    let square =
        Body::polytope(&[vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]]).unwrap();
    let z = normalized_circle(2, 2);
    assert!(matches!(objective(&square, &z, 2.0, 8), Err(Error::NonSmooth(_))));
}

#[test]
fn minimize_examples() {
    let m = minimize(&ball(4, 1.0), &cfg(8)).unwrap();
    assert!(rel(m.lambda, 2.0) < 1e-10);
    assert!((m.z.action() - 1.0).abs() < 1e-12);
    let m = minimize(&e12(), &cfg(8)).unwrap();
    assert!(rel(m.lambda, 2.0) < 1e-10);
    let m = minimize(&ball(4, 1.0), &SolveConfig { p: 3.0, ..cfg(8) }).unwrap();
    assert!(rel(m.lambda, 2.0 / PI.sqrt()) < 1e-10);
}

#[test]
fn capacity_examples() {
    let r = capacity(&ball(4, 1.0), &cfg(8)).unwrap();
    assert!(rel(r.capacity, PI) < 1e-10);
    assert!(r.converged);
    let r = capacity(&ball(4, 1.7), &cfg(8)).unwrap();
    assert!(rel(r.capacity, 1.7 * 1.7 * PI) < 1e-10);
    let q = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0]));
    let ellipse = Body::general_ellipsoid(q).unwrap();
    let r = capacity(&ellipse, &cfg(16)).unwrap();
    assert!(rel(r.capacity, 2.0 * PI) < 1e-6, "{}", r.capacity);
}

#[test]
fn euler_residual_examples() {
    let z = normalized_circle(4, 4);
    let (alpha, res) = euler_residual(&ball(4, 1.0), &z, 2.0, 2.0, 16).unwrap();
    assert!(alpha.iter().all(|a| a.abs() < 1e-15));
    assert!(res < 1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let flat: Vec<f64> = (0..2 * 4 * 4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let z = FourierLoop::from_flat(4, 4, &flat).normalize_action().unwrap();
    let b = ball(4, 1.0);
    let lam = 2.0 * PI * objective(&b, &z, 2.0, 16).unwrap().0 / (2.0 * PI);
    let (_, res) = euler_residual(&b, &z, lam, 2.0, 16).unwrap();
    assert!(res > 0.1, "{res}");
}

#[test]
fn translated_ball() {
    let x0 = vec![0.2, -0.1, 0.15, 0.05];
    let b = Body::translate(x0.clone(), ball(4, 1.0)).unwrap();
    let r = capacity(&b, &cfg(16)).unwrap();
    assert!(rel(r.capacity, PI) < 1e-6, "{}", r.capacity);
    assert!(r.alpha.iter().any(|a| a.abs() > 1e-3));
    let (_, res) = euler_residual(&b, &r.minimizer, r.lambda, 2.0, 64).unwrap();
    assert!(res < 1e-8, "{res}");
    // The carrier lies on the translated sphere.
    assert!(r.certificates.boundary_residual < 1e-8);
}

#[test]
fn carriers_of_balls_and_ellipsoids() {
    let z = normalized_circle(2, 2);
    let l = to_carrier(&z, 2.0, &[0.0, 0.0], 2.0);
    for t in [0.0, 0.4, 2.0] {
        let x = l.eval(t);
        assert!((x[0] + t.sin()).abs() < 1e-14 && (x[1] - t.cos()).abs() < 1e-14);
    }
    assert!((l.action() - PI).abs() < 1e-14);

    let r = capacity(&e12(), &cfg(16)).unwrap();
    assert!(circle_deviation(&r.carrier, 0, 1.0, 64).unwrap() < 1e-8);

    let r = capacity(&ball(4, 2.5), &cfg(8)).unwrap();
    assert!(circle_deviation(&r.carrier, 0, 2.5, 32).unwrap() < 1e-8);
    assert!(rel(r.carrier.action(), 2.5 * 2.5 * PI) < 1e-10);
}

#[test]
fn carrier_inverse() {
    // Unit circle (-sin t, cos t) on the unit ball.
    let l =
        Carrier::from_loop(FourierLoop::from_coefficients(&[vec![0.0, 1.0]], &[vec![-1.0, 0.0]]).unwrap());
    let fit = from_carrier(&ball(2, 1.0), &l, 2.0, 8, 1e-8).unwrap();
    assert!((fit.d - 0.5).abs() < 1e-14);
    let target = normalized_circle(2, 1);
    assert!(fit.z.coefficient_distance(&target) < 1e-14);
    assert!(!fit.reparametrized);

    // p = 3 on the unit ball.
    let fit = from_carrier(&ball(2, 1.0), &l, 3.0, 8, 1e-8).unwrap();
    assert!((fit.d - 2.0 / 3.0).abs() < 1e-14);
    assert!((fit.z.action() - 1.0).abs() < 1e-12);
}

#[test]
fn carrier_round_trips() {
    for (body, p) in [
        (e12(), 2.0),
        (e12(), 3.0),
        (Body::psum(2.0, vec![e12(), ball(4, 1.0)]).unwrap(), 2.0),
        (Body::general_ellipsoid(spd(4, 6)).unwrap(), 1.5),
        // Nonzero carrier mean.
        (Body::translate(vec![0.1, -0.2, 0.05, 0.1], e12()).unwrap(), 2.0),
    ] {
        let c = SolveConfig { p, ..cfg(16) };
        let r = capacity(&body, &c).unwrap();
        let fit = from_carrier(&body, &r.carrier, p, 64, 1e-6).unwrap();
        let err = fit.z.coefficient_distance(&r.minimizer);
        assert!(err < 1e-8, "p={p}: {err}");
        assert!((fit.z.action() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn reparametrized_carrier() {
    // Unit circle traversed at non-uniform speed: t ↦ t + 0.3 sin t.
    let n = 512;
    let mut samples = Vec::new();
    for j in 0..n {
        let t = 2.0 * PI * j as f64 / n as f64;
        let s = t + 0.3 * t.sin();
        samples.extend([-s.sin(), s.cos()]);
    }
    let mut offset = vec![0.0; 2];
    for row in samples.chunks_exact(2) {
        offset[0] += row[0] / n as f64;
        offset[1] += row[1] / n as f64;
    }
    let l = Carrier {
        offset,
        shape: FourierLoop::fit_samples(2, 40, &samples),
    };
    let fit = from_carrier(&ball(2, 1.0), &l, 2.0, 160, 1e-6).unwrap();
    assert!(fit.reparametrized);
    let (dist, _) = phase_aligned_distance(&normalized_circle(2, 40), &fit.z, 256);
    assert!(dist < 1e-6, "{dist}");
}

#[test]
fn rejects_non_characteristic() {
    // A square-ish loop is far from any closed characteristic of the ball.
    let z = FourierLoop::from_coefficients(
        &[vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, -0.3]],
        &[vec![-1.0, 0.0], vec![0.0, 0.0], vec![-0.3, 0.0]],
    )
    .unwrap();
    let r = from_carrier(&ball(2, 1.0), &Carrier::from_loop(z), 2.0, 32, 1e-6);
    assert!(matches!(r, Err(Error::NotCharacteristic { .. })));
}

#[test]
fn certificates() {
    let r = capacity(&ball(4, 1.0), &cfg(8)).unwrap();
    let c = &r.certificates;
    assert!(c.support_const_cv < 1e-12);
    assert!((c.support_mean - 1.0 / PI.sqrt()).abs() < 1e-12);
    assert!(c.within(1e-10));

    let r = capacity(&e12(), &cfg(16)).unwrap();
    assert!(r.certificates.support_const_cv < 1e-6);

    let mut fake = r.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let flat: Vec<f64> = (0..2 * 4 * 16).map(|_| rng.random_range(-1.0..1.0)).collect();
    fake.minimizer = FourierLoop::from_flat(4, 16, &flat).normalize_action().unwrap();
    let c = certify(&e12(), &fake).unwrap();
    assert!(c.support_const_cv > 0.1, "{}", c.support_const_cv);
    assert!(!c.within(1e-3));
}

fn spd(dim: usize, seed: u64) -> nalgebra::DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = nalgebra::DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + nalgebra::DMatrix::identity(dim, dim) * 0.5
}

#[test]
fn capacity_invariances() {
    let c = cfg(16);
    let base = capacity(&e12(), &c).unwrap().capacity;
    let scaled = capacity(&Body::scale(1.3, e12()).unwrap(), &c).unwrap().capacity;
    assert!(rel(scaled, 1.69 * base) < 1e-6);
    let moved = Body::translate(vec![0.1, 0.2, -0.3, 0.1], e12()).unwrap();
    assert!(rel(capacity(&moved, &c).unwrap().capacity, base) < 1e-6);
    let m = SymplecticContext::new(2).random_symplectic(7, 0.3);
    let image = Body::linear(m, e12()).unwrap();
    assert!(rel(capacity(&image, &c).unwrap().capacity, base) < 1e-3);
    let small = capacity(&ball(4, 1.0), &c).unwrap().capacity;
    let big = capacity(&ball(4, 2.0), &c).unwrap().capacity;
    assert!(small <= base * (1.0 + 1e-9) && base <= big);
}

#[test]
fn general_ellipsoid_matches_symplectic_spectrum() {
    // c = π / d_max where ±i d_j are the eigenvalues of A^{1/2} J A^{1/2},
    // A = Q⁻¹.
    let q = spd(4, 12);
    let a = q.clone().try_inverse().unwrap();
    let eig = a.clone().symmetric_eigen();
    let sqrt_a = &eig.eigenvectors
        * nalgebra::DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
        * eig.eigenvectors.transpose();
    let j = SymplecticContext::new(2).j_matrix();
    let s = &sqrt_a * &j * &sqrt_a;
    let m = -(&s * &s);
    let dmax = m.symmetric_eigen().eigenvalues.max().sqrt();
    let oracle = PI / dmax;
    let r = capacity(&Body::general_ellipsoid(q).unwrap(), &cfg(16)).unwrap();
    assert!(rel(r.capacity, oracle) < 1e-8, "{} vs {oracle}", r.capacity);
    assert!(r.certificates.within(1e-5));
}

#[test]
fn exponent_independence() {
    for body in [
        ball(4, 1.0),
        e12(),
        Body::psum(2.0, vec![e12(), ball(4, 1.0)]).unwrap(),
    ] {
        let caps: Vec<f64> = [1.5, 2.0, 3.0]
            .iter()
            .map(|&p| capacity(&body, &SolveConfig { p, ..cfg(16) }).unwrap().capacity)
            .collect();
        assert!(
            rel(caps[0], caps[1]) < 1e-4 && rel(caps[2], caps[1]) < 1e-4,
            "{caps:?}"
        );
    }
}

#[test]
fn stability_check_reports_drift() {
    let c = SolveConfig {
        stability_check: true,
        ..cfg(8)
    };
    let r = capacity(&e12(), &c).unwrap();
    let s = r.stability.unwrap();
    assert_eq!(s.modes, 16);
    assert!(s.rel_drift < 1e-6);
}

#[test]
fn deterministic_across_runs() {
    let body = Body::psum(2.0, vec![e12(), ball(4, 1.0)]).unwrap();
    let a = capacity(&body, &cfg(8)).unwrap();
    let b = capacity(&body, &cfg(8)).unwrap();
    assert_eq!(a.capacity.to_bits(), b.capacity.to_bits());
    assert_eq!(a.minimizer, b.minimizer);
    assert_eq!(a.per_start, b.per_start);
}

#[test]
fn starts_are_seeded() {
    let body = ball(4, 1.0);
    let c0 = cfg(4);
    let c1 = SolveConfig { seed: 5, ..cfg(4) };
    let a = start_loop(&body, &c0, 3);
    let b = start_loop(&body, &c0, 3);
    let c = start_loop(&body, &c1, 3);
    assert_eq!(a, b);
    assert_ne!(a, c);
    // The first n starts are the planar circles.
    assert_eq!(
        start_loop(&body, &c0, 1),
        FourierLoop::circle(4, 4, 1, 1.0 / PI.sqrt())
    );
}

#[test]
fn config_validation() {
    assert!(SolveConfig { p: 1.0, ..cfg(4) }.validate().is_err());
    assert!(SolveConfig { starts: 0, ..cfg(4) }.validate().is_err());
    assert!(matches!(
        SolveConfig {
            nodes: Some(10),
            ..cfg(4)
        }
        .validate(),
        Err(Error::GridTooSmall { .. })
    ));
}

#[test]
fn heptagon_extrapolation_beats_single_sharpness() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut angles: Vec<f64> = (0..7).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    angles.sort_by(f64::total_cmp);
    // Keep gaps below π so the origin stays inside.
    angles = (0..7)
        .map(|i| 2.0 * PI * i as f64 / 7.0 + 0.3 * (angles[i] - PI) / PI)
        .collect();
    let verts: Vec<Vec<f64>> = angles
        .iter()
        .map(|a| {
            let r = rng.random_range(0.8..1.2);
            vec![r * a.cos(), r * a.sin()]
        })
        .collect();
    let area = 0.5
        * (0..7)
            .map(|i| {
                let (a, b) = (&verts[i], &verts[(i + 1) % 7]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>();
    let p = Body::polytope(&verts).unwrap();
    let est = extrapolated_polytope_capacity(&p, &cfg(32), [64.0, 128.0]).unwrap();
    assert!(rel(est.estimate, area) < 1e-3, "{} vs {area}", est.estimate);
    let raw = est.ladder.last().unwrap().capacity;
    assert!(rel(est.estimate, area) < rel(raw, area));
}

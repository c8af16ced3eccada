//! The acceptance suite: thirteen end-to-end criteria with fixed seeds and
//! tolerances, shared by the integration tests and the `suite` command.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::body::Body;
use crate::error::Result;
use crate::harness::{
    all_pass, bm_check, build_intersection_surrogate, directional_derivative, equality_certificate,
    intersection_concavity_check, isoperimetric_check, mean_width, mean_width_bound_check, InequalityReport,
    SurrogateConfig, DEFAULT_EPS_SCHEDULE, SOLVER_SLACK,
};
use crate::linalg::norm;
use crate::solver::{capacity, circle_deviation, extrapolated_polytope_capacity, from_carrier, SolveConfig};
use crate::symplectic::SymplecticContext;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub summary: String,
    pub details: Value,
    pub seconds: f64,
}

impl CriterionOutcome {
    /// `PASS [07] title: summary (1.2 s)`.
    pub fn line(&self) -> String {
        format!(
            "{} [{:02}] {}: {} ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.summary,
            self.seconds
        )
    }
}

pub const CRITERIA: [(u8, &str); 13] = [
    (1, "ball normalization"),
    (2, "ellipsoid capacity and carrier"),
    (3, "planar area oracle"),
    (4, "cylinder limit"),
    (5, "invariances and monotonicity"),
    (6, "exponent consistency"),
    (7, "certificates and carrier round trips"),
    (8, "Brunn-Minkowski"),
    (9, "isoperimetric bound"),
    (10, "directional derivative"),
    (11, "mean-width bound"),
    (12, "intersection concavity"),
    (13, "discretization stability"),
];

pub fn run_criterion(id: u8) -> CriterionOutcome {
    let title = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, t)| t.to_string())
        .unwrap_or_else(|| format!("unknown criterion {id}"));
    let start = Instant::now();
    let result = match id {
        1 => ball_normalization(),
        2 => ellipsoids(),
        3 => planar_area_oracle(),
        4 => cylinder_limit(),
        5 => invariances(),
        6 => exponent_consistency(),
        7 => certificates(),
        8 => brunn_minkowski(),
        9 => isoperimetric(),
        10 => derivative(),
        11 => mean_width_bound(),
        12 => intersection_concavity(),
        13 => stability(),
        _ => Ok(Verdict::fail("no such criterion", Value::Null)),
    };
    let verdict = result.unwrap_or_else(|e| Verdict::fail(format!("error: {e}"), Value::Null));
    CriterionOutcome {
        id,
        title,
        pass: verdict.pass,
        summary: verdict.summary,
        details: verdict.details,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|(id, _)| run_criterion(*id)).collect()
}

/// Plain-text table, one row per criterion.
pub fn summary_table(outcomes: &[CriterionOutcome]) -> String {
    let mut out = String::from("id  result  seconds  criterion\n");
    for o in outcomes {
        out.push_str(&format!(
            "{:>2}  {:<6}  {:>7.1}  {}: {}\n",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.seconds,
            o.title,
            o.summary
        ));
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    out.push_str(&format!("{passed}/{} passed\n", outcomes.len()));
    out
}

struct Verdict {
    pass: bool,
    summary: String,
    details: Value,
}

impl Verdict {
    fn new(pass: bool, summary: impl Into<String>, details: Value) -> Self {
        Self {
            pass,
            summary: summary.into(),
            details,
        }
    }

    fn fail(summary: impl Into<String>, details: Value) -> Self {
        Self::new(false, summary, details)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn cfg(modes: usize) -> SolveConfig {
    SolveConfig {
        modes,
        ..SolveConfig::default()
    }
}

/// Randomized sweeps: fewer starts, and a larger iteration cap because
/// smoothed polytopes converge slowly.
fn sweep_cfg() -> SolveConfig {
    SolveConfig {
        starts: 4,
        max_iter: 2000,
        ..cfg(16)
    }
}

/// Random generators for the randomized parts of the suite.
pub mod bodies {
    use super::*;

    /// `{xᵀQ⁻¹x <= 1}` with `Q = A Aᵀ`, `A = I + 0.4 U(-1,1)`.
    pub fn random_ellipsoid(dim: usize, seed: u64) -> Result<Body> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(dim, dim, |i, j| {
            (if i == j { 1.0 } else { 0.0 }) + 0.4 * rng.random_range(-1.0..1.0)
        });
        Body::general_ellipsoid(&a * a.transpose() + DMatrix::identity(dim, dim) * 0.1)
    }

    /// Smoothed hull of `±v_i` for `count` random `v_i` with norms in `[0.8, 1.2]`.
    pub fn random_symmetric_polytope(dim: usize, count: usize, sharpness: f64, seed: u64) -> Result<Body> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut verts = Vec::with_capacity(2 * count);
        for _ in 0..count {
            let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = rng.random_range(0.8..1.2) / norm(&g);
            let v: Vec<f64> = g.iter().map(|x| x * r).collect();
            verts.push(v.iter().map(|x| -x).collect());
            verts.push(v);
        }
        Body::smoothed(sharpness, Body::polytope(&verts)?)
    }

    /// p-sum of two random ellipsoids, `p ∈ [1.5, 3]`.
    pub fn random_psum(dim: usize, seed: u64) -> Result<Body> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let p = rng.random_range(1.5..3.0);
        Body::psum(
            p,
            vec![random_ellipsoid(dim, seed)?, random_ellipsoid(dim, seed + 1000)?],
        )
    }

    /// Cycles through ellipsoids, smoothed polytopes and p-sums.
    pub fn random_body(dim: usize, seed: u64) -> Result<Body> {
        match seed % 3 {
            0 => random_ellipsoid(dim, seed),
            1 => random_symmetric_polytope(dim, 8, 24.0, seed),
            _ => random_psum(dim, seed),
        }
    }

    /// Convex `n`-gon with vertices near the unit circle, origin inside.
    pub fn random_convex_polygon(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        angles.sort_by(f64::total_cmp);
        angles = (0..n)
            .map(|i| 2.0 * PI * i as f64 / n as f64 + 0.3 * (angles[i] - PI) / PI)
            .collect();
        angles
            .iter()
            .map(|a| {
                let r = rng.random_range(0.8..1.2);
                vec![r * a.cos(), r * a.sin()]
            })
            .collect()
    }

    pub fn shoelace(verts: &[Vec<f64>]) -> f64 {
        let n = verts.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (&verts[i], &verts[(i + 1) % n]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }
}

use bodies::*;

fn ball_normalization() -> Result<Verdict> {
    let c = cfg(8);
    let mut worst: f64 = 0.0;
    let mut caps = Vec::new();
    for r in [1.0, 1.7] {
        let got = capacity(&Body::ball(4, r)?, &c)?.capacity;
        worst = worst.max(rel(got, PI * r * r));
        caps.push(got);
    }
    Ok(Verdict::new(
        worst <= 1e-6,
        format!("max rel err {worst:.2e} (tol 1e-6)"),
        json!({"capacities": caps, "max_rel_err": worst}),
    ))
}

fn ellipsoids() -> Result<Verdict> {
    let c = cfg(16);
    let mut worst_cap: f64 = 0.0;
    let mut worst_dev: f64 = 0.0;
    let mut rows = Vec::new();
    for radii in [vec![1.0, 2.0], vec![1.0, 2.0, 3.0]] {
        let r = capacity(&Body::ellipsoid(&radii)?, &c)?;
        let err = rel(r.capacity, PI);
        let dev = circle_deviation(&r.carrier, 0, 1.0, 4 * c.grid_nodes())?;
        worst_cap = worst_cap.max(err);
        worst_dev = worst_dev.max(dev);
        rows.push(json!({"radii": radii, "capacity": r.capacity, "carrier_deviation": dev}));
    }
    Ok(Verdict::new(
        worst_cap <= 1e-4 && worst_dev <= 1e-4,
        format!("rel err {worst_cap:.2e}, carrier deviation {worst_dev:.2e} (tol 1e-4)"),
        json!(rows),
    ))
}

fn planar_area_oracle() -> Result<Verdict> {
    let q = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0]));
    let ellipse = capacity(&Body::general_ellipsoid(q)?, &cfg(16))?.capacity;
    let e_err = rel(ellipse, 2.0 * PI);

    let verts = random_convex_polygon(7, 21);
    let area = shoelace(&verts);
    let poly = Body::polytope(&verts)?;
    let est = extrapolated_polytope_capacity(&poly, &cfg(32), [64.0, 128.0])?;
    let h_err = rel(est.estimate, area);
    let raw = est.ladder.last().map(|p| p.capacity).unwrap_or(f64::NAN);
    Ok(Verdict::new(
        e_err <= 1e-4 && h_err <= 1e-3,
        format!("ellipse rel err {e_err:.2e} (tol 1e-4), heptagon rel err {h_err:.2e} (tol 1e-3)"),
        json!({
            "ellipse": ellipse,
            "heptagon_area": area,
            "heptagon_estimate": est.estimate,
            "heptagon_s128_m64": raw,
            "heptagon_s128_m64_rel_err": rel(raw, area),
            "ladder": est.ladder,
        }),
    ))
}

fn cylinder_limit() -> Result<Verdict> {
    let c = cfg(16);
    let mut worst: f64 = 0.0;
    let mut caps = Vec::new();
    for big in [2.0, 5.0, 10.0] {
        let got = capacity(&Body::ellipsoid(&[1.0, big])?, &c)?.capacity;
        worst = worst.max(rel(got, PI));
        caps.push(got);
    }
    Ok(Verdict::new(
        worst <= 1e-4,
        format!("max deviation from π {worst:.2e} (tol 1e-4)"),
        json!({"R": [2.0, 5.0, 10.0], "capacities": caps}),
    ))
}

fn invariances() -> Result<Verdict> {
    let c = cfg(16);
    let k = Body::psum(3.0, vec![Body::ellipsoid(&[1.0, 2.0])?, Body::ball(4, 1.2)?])?;
    let base = capacity(&k, &c)?.capacity;
    let conf = capacity(&Body::scale(1.3, k.clone())?, &c)?.capacity;
    let conf_err = rel(conf, 1.69 * base);
    let moved = capacity(&Body::translate(vec![0.1, 0.2, -0.15, 0.05], k.clone())?, &c)?.capacity;
    let move_err = rel(moved, base);
    let m = SymplecticContext::new(2).random_symplectic(7, 0.3);
    let image = capacity(&Body::linear(m, k.clone())?, &c)?.capacity;
    let image_err = rel(image, base);
    let chain: Vec<f64> = [
        Body::ball(4, 1.0)?,
        Body::ellipsoid(&[1.0, 2.0])?,
        Body::ball(4, 2.0)?,
    ]
    .iter()
    .map(|b| capacity(b, &c).map(|r| r.capacity))
    .collect::<Result<_>>()?;
    let monotone = chain[0] <= chain[1] * (1.0 + 1e-9) && chain[1] <= chain[2] * (1.0 + 1e-9);
    let pass = conf_err <= 1e-6 && move_err <= 1e-6 && image_err <= 1e-3 && monotone;
    Ok(Verdict::new(
        pass,
        format!(
            "conformal {conf_err:.1e}, translation {move_err:.1e}, symplectic {image_err:.1e}, chain {}",
            if monotone { "ok" } else { "violated" }
        ),
        json!({"base": base, "conformal": conf, "translated": moved, "image": image, "chain": chain}),
    ))
}

fn exponent_consistency() -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for body in [Body::ball(4, 1.0)?, Body::ellipsoid(&[1.0, 2.0])?] {
        let caps: Vec<f64> = [1.5, 2.0, 3.0]
            .iter()
            .map(|&p| capacity(&body, &SolveConfig { p, ..cfg(16) }).map(|r| r.capacity))
            .collect::<Result<_>>()?;
        worst = worst.max(rel(caps[0], caps[1])).max(rel(caps[2], caps[1]));
        let r2 = capacity(&body, &cfg(16))?;
        let p1 = r2
            .certificates
            .p_consistency
            .iter()
            .find(|c| c.p == 1.0)
            .map(|c| c.rel_diff)
            .unwrap_or(f64::INFINITY);
        worst = worst.max(p1);
        rows.push(json!({"capacities": caps, "p1_recertify_rel": p1}));
    }
    Ok(Verdict::new(
        worst <= 1e-4,
        format!("max rel spread {worst:.2e} (tol 1e-4)"),
        json!(rows),
    ))
}

fn certificates() -> Result<Verdict> {
    let c = cfg(16);
    let m = SymplecticContext::new(2).random_symplectic(3, 0.3);
    let cases: Vec<(&str, Body, f64)> = vec![
        ("ball", Body::ball(4, 1.0)?, 2.0),
        ("ellipsoid(1,2)", Body::ellipsoid(&[1.0, 2.0])?, 2.0),
        ("ellipsoid(1,2,3)", Body::ellipsoid(&[1.0, 2.0, 3.0])?, 2.0),
        ("general ellipsoid", random_ellipsoid(4, 4)?, 2.0),
        (
            "symplectic image",
            Body::linear(m, Body::ellipsoid(&[1.0, 1.5])?)?,
            2.0,
        ),
        (
            "translated",
            Body::translate(vec![0.1, -0.2, 0.05, 0.1], Body::ellipsoid(&[1.0, 2.0])?)?,
            2.0,
        ),
        ("ellipsoid p=3", Body::ellipsoid(&[1.0, 2.0])?, 3.0),
        ("general ellipsoid p=1.5", random_ellipsoid(4, 6)?, 1.5),
    ];
    let mut worst_cert: f64 = 0.0;
    let mut worst_trip: f64 = 0.0;
    let mut rows = Vec::new();
    for (name, body, p) in cases {
        let cc = SolveConfig { p, ..c.clone() };
        let r = capacity(&body, &cc)?;
        let b = &r.certificates;
        let cert = [
            b.euler_residual_rel,
            b.support_const_cv,
            b.boundary_residual,
            b.action_mismatch_rel,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let fit = from_carrier(&body, &r.carrier, p, cc.grid_nodes(), 1e-6)?;
        let trip = fit.z.coefficient_distance(&r.minimizer) / r.minimizer.coefficient_norm();
        worst_cert = worst_cert.max(cert);
        worst_trip = worst_trip.max(trip);
        rows.push(json!({"body": name, "p": p, "certificates": b, "round_trip": trip}));
    }
    Ok(Verdict::new(
        worst_cert <= 1e-5 && worst_trip <= 1e-8,
        format!("max certificate {worst_cert:.2e} (tol 1e-5), round trip {worst_trip:.2e} (tol 1e-8)"),
        json!(rows),
    ))
}

fn brunn_minkowski() -> Result<Verdict> {
    let c = cfg(16);
    let b1 = Body::ball(4, 1.0)?;
    let b2 = Body::ball(4, 2.0)?;
    let mut eq_ok = true;
    let mut eq_rows = Vec::new();
    for p in [1.0, 2.0] {
        let r = bm_check(&b1, &b2, p, &c, SOLVER_SLACK)?;
        let h = equality_certificate(&b1, &b2, p, &c, 1e-6)?;
        eq_ok &= r.deficit.abs() <= 1e-5 * r.rhs && h.pass;
        eq_rows.push(json!({"p": p, "deficit": r.deficit, "rhs": r.rhs, "homothety_residual": h.lhs}));
    }

    let fast = sweep_cfg();
    let mut violations = 0;
    let mut worst: f64 = f64::INFINITY;
    let mut reports: Vec<InequalityReport> = Vec::new();
    for i in 0..50u64 {
        let k = random_body(4, 100 + 2 * i)?;
        let t = random_body(4, 101 + 2 * i)?;
        let p = [1.0, 2.0, 1.5][i as usize % 3];
        let r = bm_check(&k, &t, p, &fast, SOLVER_SLACK)?;
        if !r.pass {
            violations += 1;
        }
        worst = worst.min(r.deficit / r.rhs);
        reports.push(r);
    }
    Ok(Verdict::new(
        eq_ok && violations == 0,
        format!(
            "equality cases {}, random pairs: {violations} violations, min rel deficit {worst:.2e}",
            if eq_ok { "ok" } else { "failed" }
        ),
        json!({"equality": eq_rows, "random": reports}),
    ))
}

fn isoperimetric() -> Result<Verdict> {
    let c = cfg(16);
    let b = Body::ball(4, 1.0)?;
    let eq = isoperimetric_check(&b, &b, &c, SOLVER_SLACK)?;
    let eq_dev = eq[0].deficit.abs() / eq[0].rhs;
    let fast = sweep_cfg();
    let mut failed = 0;
    let mut all = Vec::new();
    for i in 0..20u64 {
        let k = random_body(4, 300 + 2 * i)?;
        let t = random_body(4, 301 + 2 * i)?;
        let r = isoperimetric_check(&k, &t, &fast, SOLVER_SLACK)?;
        if !all_pass(&r) {
            failed += 1;
        }
        all.extend(r);
    }
    Ok(Verdict::new(
        eq_dev <= 1e-6 && all_pass(&eq) && failed == 0,
        format!("ball equality {eq_dev:.2e} (tol 1e-6), random pairs failing: {failed}/20"),
        json!({"ball": eq, "random": all}),
    ))
}

fn derivative() -> Result<Verdict> {
    let b = Body::ball(4, 1.0)?;
    let reports = directional_derivative(&b, &b, &cfg(16), &DEFAULT_EPS_SCHEDULE, SOLVER_SLACK)?;
    let mut worst: f64 = 0.0;
    for (e, r) in DEFAULT_EPS_SCHEDULE
        .iter()
        .zip(reports.iter().filter(|r| r.name.starts_with("derivative_lower[")))
    {
        worst = worst.max(rel(r.rhs, PI * (2.0 + e)));
    }
    let limit = reports
        .iter()
        .find(|r| r.name == "derivative_limit_lower")
        .map(|r| rel(r.rhs, 2.0 * PI).max(rel(r.lhs, 2.0 * PI)))
        .unwrap_or(f64::INFINITY);
    let monotone = reports
        .iter()
        .filter(|r| r.name.starts_with("derivative_monotone"))
        .all(|r| r.pass);
    Ok(Verdict::new(
        worst <= 1e-6 && limit <= 1e-6 && monotone && all_pass(&reports),
        format!("quotient rel err {worst:.2e}, limit vs 2π {limit:.2e} (tol 1e-6), monotone {monotone}"),
        json!(reports),
    ))
}

fn mean_width_bound() -> Result<Verdict> {
    let c = sweep_cfg();
    let samples = 200_000;
    let ball = mean_width_bound_check(&Body::ball(4, 1.0)?, &c, samples, 1, SOLVER_SLACK)?;
    let ball_ok = ball.pass && ball.deficit.abs() <= ball.slack;

    let mut failed = 0;
    let mut reports = Vec::new();
    for i in 0..20u64 {
        let k = match i % 4 {
            0 => random_ellipsoid(4, 500 + i)?,
            1 => random_symmetric_polytope(4, 10, 24.0, 500 + i)?,
            2 => Body::psum(
                2.0 + (i as f64) / 20.0,
                vec![
                    random_ellipsoid(4, 500 + i)?,
                    random_symmetric_polytope(4, 8, 24.0, 600 + i)?,
                ],
            )?,
            _ => Body::minkowski(
                vec![random_ellipsoid(4, 500 + i)?, random_ellipsoid(4, 700 + i)?],
                None,
            )?,
        };
        let r = mean_width_bound_check(&k, &c, samples, 10 + i, SOLVER_SLACK)?;
        if !r.pass {
            failed += 1;
        }
        reports.push(r);
    }

    let k = random_ellipsoid(4, 900)?;
    let t = random_symmetric_polytope(4, 10, 24.0, 901)?;
    let s = Body::minkowski(vec![k.clone(), t.clone()], None)?;
    let (mk, mt, ms) = (
        mean_width(&k, samples, 31)?,
        mean_width(&t, samples, 32)?,
        mean_width(&s, samples, 33)?,
    );
    let gap = (ms.estimate - mk.estimate - mt.estimate).abs();
    let combined = (mk.std_error.powi(2) + mt.std_error.powi(2) + ms.std_error.powi(2)).sqrt();
    let additive = gap <= 3.0 * combined;

    Ok(Verdict::new(
        ball_ok && failed == 0 && additive,
        format!(
            "ball deficit {:.1e} within margin {:.1e}, random bodies failing {failed}/20, additivity gap {:.1}σ",
            ball.deficit,
            ball.slack,
            gap / combined
        ),
        json!({"ball": ball, "random": reports, "additivity": {"k": mk, "t": mt, "sum": ms, "gap": gap, "sigma": combined}}),
    ))
}

fn intersection_concavity() -> Result<Verdict> {
    let disc = Body::ball(2, 1.0)?;
    let scfg = SurrogateConfig::default();
    let lens = build_intersection_surrogate(&disc, &disc, &[1.0, 0.0], &scfg)?;
    let lens_cap = lens.capacity(&cfg(16))?;
    let exact = 2.0 * PI / 3.0 - 3f64.sqrt() / 2.0;
    let lens_err = rel(lens_cap, exact);

    let c = sweep_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut failed = 0;
    let mut worst_audit: f64 = 0.0;
    let mut reports = Vec::new();
    for i in 0..10u64 {
        let k = random_ellipsoid(4, 1200 + 2 * i)?;
        let t = random_ellipsoid(4, 1201 + 2 * i)?;
        let shift =
            |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..4).map(|_| rng.random_range(-0.5..0.5)).collect() };
        let x = shift(&mut rng);
        let y = shift(&mut rng);
        let lam = rng.random_range(0.25..0.75);
        let r = intersection_concavity_check(&k, &t, &x, &y, lam, &c, &scfg, SOLVER_SLACK)?;
        if !all_pass(&r) {
            failed += 1;
        }
        for rep in &r {
            if let Some(Value::Array(a)) = rep.witnesses.get("audit_error") {
                for v in a.iter().filter_map(Value::as_f64) {
                    worst_audit = worst_audit.max(v);
                }
            }
        }
        reports.extend(r);
    }
    Ok(Verdict::new(
        lens_err <= 1e-3 && failed == 0,
        format!(
            "lens rel err {lens_err:.2e} (tol 1e-3), R4 pairs failing {failed}/10, max surrogate audit error {worst_audit:.2e}"
        ),
        json!({"lens": lens_cap, "lens_exact": exact, "lens_audit": lens.audit_error, "random": reports}),
    ))
}

fn stability() -> Result<Verdict> {
    let check = |body: &Body, modes: usize| -> Result<f64> {
        let r = capacity(
            body,
            &SolveConfig {
                stability_check: true,
                max_iter: 5000,
                ..cfg(modes)
            },
        )?;
        Ok(r.stability.map(|s| s.rel_drift).unwrap_or(f64::INFINITY))
    };
    let smooth = [
        Body::ball(4, 1.0)?,
        Body::ellipsoid(&[1.0, 2.0])?,
        Body::ellipsoid(&[1.0, 2.0, 3.0])?,
        random_ellipsoid(4, 4)?,
        Body::psum(3.0, vec![Body::ellipsoid(&[1.0, 2.0])?, Body::ball(4, 1.2)?])?,
    ];
    let mut worst_smooth: f64 = 0.0;
    for b in &smooth {
        worst_smooth = worst_smooth.max(check(b, 16)?);
    }
    // Smoothed polytopes at the default sharpness.
    let heptagon = Body::smoothed(64.0, Body::polytope(&random_convex_polygon(7, 21))?)?;
    let worst_poly = check(&heptagon, 16)?.max(check(&random_symmetric_polytope(4, 8, 64.0, 3)?, 16)?);
    Ok(Verdict::new(
        worst_smooth <= 1e-6 && worst_poly <= 1e-4,
        format!("smooth drift {worst_smooth:.2e} (tol 1e-6), smoothed polytopes {worst_poly:.2e} (tol 1e-4)"),
        json!({"smooth": worst_smooth, "smoothed_polytopes": worst_poly}),
    ))
}

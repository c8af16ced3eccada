use std::f64::consts::PI;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::body::{intersection_support, Body};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::solver::{capacity, SolveConfig};

use super::InequalityReport;

/// Direction design and smoothing of the intersection surrogate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    /// Design size in R²; directions are equally spaced angles.
    pub planar_directions: usize,
    /// Design size in higher dimension; directions are seeded Gaussian draws.
    pub directions: usize,
    /// Sharpness of the smoothed hull of the support points.
    pub sharpness: f64,
    /// Random directions on which the surrogate support is compared with the
    /// exact intersection support.
    pub audit: usize,
    pub seed: u64,
    /// Tolerance handed to [`intersection_support`].
    pub support_tol: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            planar_directions: 2048,
            directions: 1024,
            sharpness: 128.0,
            audit: 256,
            seed: 0,
            support_tol: 1e-9,
        }
    }
}

/// Smoothed hull of support points of `K ∩ (x + T)`, recentered at a deep
/// point of the intersection.
#[derive(Clone, Debug)]
pub struct IntersectionSurrogate {
    /// Deep point in the original coordinates.
    pub center: Vec<f64>,
    /// Radius of the inscribed ball found by the deep-point problem.
    pub depth: f64,
    /// Support points relative to `center`.
    pub points: Vec<Vec<f64>>,
    pub body: Body,
    /// Largest relative support error on the audit directions.
    pub audit_error: f64,
}

impl IntersectionSurrogate {
    /// Shoelace area in R², the capacity of the smoothed hull otherwise.
    pub fn capacity(&self, cfg: &SolveConfig) -> Result<f64> {
        if self.body.dim() == 2 {
            Ok(planar_area(&self.points))
        } else {
            Ok(capacity(&self.body, cfg)?.capacity)
        }
    }
}

fn gaussian_directions(d: usize, n: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = norm(&g);
        if r > 1e-12 {
            out.push(g.into_iter().map(|v| v / r).collect());
        }
    }
    out
}

fn design(d: usize, cfg: &SurrogateConfig) -> Vec<Vec<f64>> {
    if d == 2 {
        let n = cfg.planar_directions;
        (0..n)
            .map(|j| {
                let a = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect()
    } else {
        let mut dirs = gaussian_directions(d, cfg.directions, cfg.seed, 0);
        for i in 0..d {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[i] = s;
                dirs.push(e);
            }
        }
        dirs
    }
}

/// Largest ball `B(c, r)` inside the outer polyhedron
/// `{⟨·,u_j⟩ <= min(h_K(u_j), h_T(u_j) + ⟨x,u_j⟩)}`.
fn deep_point(k: &Body, t: &Body, x: &[f64], dirs: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let d = k.dim();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let c: Vec<_> = (0..d)
        .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let r = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for u in dirs {
        let bound = k.h(u).min(t.h(u) + dot(x, u));
        let mut row: Vec<_> = c.iter().zip(u).map(|(&v, &w)| (v, w)).collect();
        row.push((r, 1.0));
        lp.add_constraint(&row, ComparisonOp::Le, bound);
    }
    let sol = lp
        .solve()
        .map_err(|_| Error::EmptyIntersection { depth: f64::NAN })?;
    Ok((c.iter().map(|&v| sol[v]).collect(), sol[r]))
}

/// Surrogate of `K ∩ (x + T)`: recenter at the deep point, collect exact
/// support points of the intersection on the direction design and take the
/// smoothed hull of those points.
pub fn build_intersection_surrogate(
    k: &Body,
    t: &Body,
    x: &[f64],
    cfg: &SurrogateConfig,
) -> Result<IntersectionSurrogate> {
    let d = k.dim();
    if t.dim() != d || x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if t.dim() != d { t.dim() } else { x.len() },
        });
    }
    let dirs = design(d, cfg);
    let (center, depth) = deep_point(k, t, x, &dirs)?;
    let scale = dirs.iter().map(|u| k.h(u)).fold(0.0, f64::max);
    if !(depth > 1e-6 * scale) {
        return Err(Error::EmptyIntersection { depth });
    }
    let neg: Vec<f64> = center.iter().map(|v| -v).collect();
    let shift: Vec<f64> = x.iter().zip(&center).map(|(a, b)| a - b).collect();
    let kc = Body::translate(neg, k.clone())?;
    let tc = Body::translate(shift, t.clone())?;

    let mut points = Vec::with_capacity(dirs.len());
    for u in &dirs {
        points.push(intersection_support(&kc, &tc, u, cfg.support_tol)?.point);
    }
    let body = Body::smoothed(cfg.sharpness, Body::polytope(&points)?)?;

    let mut audit_error: f64 = 0.0;
    for u in gaussian_directions(d, cfg.audit, cfg.seed, 1) {
        let exact = intersection_support(&kc, &tc, &u, cfg.support_tol)?.value;
        let approx = if d == 2 {
            points
                .iter()
                .map(|p| dot(p, &u))
                .fold(f64::NEG_INFINITY, f64::max)
        } else {
            body.h(&u)
        };
        audit_error = audit_error.max((approx - exact).abs() / exact.abs());
    }

    Ok(IntersectionSurrogate {
        center,
        depth,
        points,
        body,
        audit_error,
    })
}

/// Area of the convex hull of planar points that surround the origin,
/// by angular sorting and the shoelace formula.
pub fn planar_area(points: &[Vec<f64>]) -> f64 {
    let mut pts: Vec<(f64, f64, f64)> = points.iter().map(|p| (p[1].atan2(p[0]), p[0], p[1])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len();
    let mut twice = 0.0;
    for i in 0..n {
        let (_, x0, y0) = pts[i];
        let (_, x1, y1) = pts[(i + 1) % n];
        twice += x0 * y1 - x1 * y0;
    }
    0.5 * twice.abs()
}

/// `λ c^{1/2}(K∩(x+T)) + (1-λ) c^{1/2}(K∩(y+T)) <= c^{1/2}(K∩(λx+(1-λ)y+T))`
/// on surrogates. For `y = -x`, `λ = 1/2` the report
/// `c(K∩(x+T)) <= c(K∩T)` is added. Audit errors are attached as witnesses
/// and do not enter the pass flag.
#[allow(clippy::too_many_arguments)]
pub fn intersection_concavity_check(
    k: &Body,
    t: &Body,
    x: &[f64],
    y: &[f64],
    lam: f64,
    cfg: &SolveConfig,
    scfg: &SurrogateConfig,
    rel_slack: f64,
) -> Result<Vec<InequalityReport>> {
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::invalid("lam", "must lie in [0, 1]"));
    }
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();

    let mut cache: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    let mut cap = |shift: &[f64]| -> Result<(f64, f64)> {
        if let Some((_, c, a)) = cache.iter().find(|(s, _, _)| s.as_slice() == shift) {
            return Ok((*c, *a));
        }
        let s = build_intersection_surrogate(k, t, shift, scfg)?;
        let c = s.capacity(cfg)?;
        cache.push((shift.to_vec(), c, s.audit_error));
        Ok((c, s.audit_error))
    };
    let (ca, audit_a) = cap(x)?;
    let (cb, audit_b) = cap(y)?;
    let (cc, audit_c) = cap(&z)?;
    let lhs = lam * ca.sqrt() + (1.0 - lam) * cb.sqrt();
    let rhs = cc.sqrt();
    let mut out = vec![
        InequalityReport::at_most("intersection_concavity", lhs, rhs, rel_slack * rhs)
            .witness("lam", lam)
            .witness("capacities", [ca, cb, cc])
            .witness("audit_error", [audit_a, audit_b, audit_c]),
    ];

    let symmetric = lam == 0.5 && x.iter().zip(y).all(|(a, b)| *a == -*b);
    if symmetric {
        let zero = vec![0.0; x.len()];
        let (c0, audit_0) = cap(&zero)?;
        out.push(
            InequalityReport::at_most("intersection_symmetric", ca, c0, rel_slack * c0)
                .witness("audit_error", [audit_a, audit_0]),
        );
    }
    Ok(out)
}

use super::Body;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::optim::{self, LbfgsConfig};

/// Support of `K ∩ T` in one direction, with a feasible support point.
#[derive(Clone, Debug, PartialEq)]
pub struct IntersectionSupport {
    /// Best upper bound `h_K(u₁) + h_T(u - u₁)`.
    pub value: f64,
    /// A point of `K ∩ T` attaining `value - gap` in direction `u`.
    pub point: Vec<f64>,
    /// Upper minus lower bound.
    pub gap: f64,
    /// Share `u₁` of the direction assigned to `K`.
    pub split: Vec<f64>,
}

/// `h_{K∩T}(u) = inf_{u₁+u₂=u} h_K(u₁) + h_T(u₂)` (infimal convolution).
///
/// End cases are detected exactly: when the support point of one body lies in
/// the other, that body's support value is the answer. Otherwise the split is
/// found by descent and certified by a feasible point.
pub fn intersection_support(k: &Body, t: &Body, u: &[f64], tol: f64) -> Result<IntersectionSupport> {
    let d = k.dim();
    if t.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: t.dim(),
        });
    }
    let sk = k.support(u)?;
    let st = t.support(u)?;

    if t.gauge(&sk.gradient)?.value <= 1.0 + tol {
        return Ok(IntersectionSupport {
            value: sk.value,
            point: sk.gradient,
            gap: 0.0,
            split: u.to_vec(),
        });
    }
    if k.gauge(&st.gradient)?.value <= 1.0 + tol {
        return Ok(IntersectionSupport {
            value: st.value,
            point: st.gradient,
            gap: 0.0,
            split: vec![0.0; d],
        });
    }

    // u₁ = u/2 + w, u₂ = u/2 - w.
    let half: Vec<f64> = u.iter().map(|v| 0.5 * v).collect();
    let split_value = |w: &[f64], g: &mut [f64]| {
        let u1: Vec<f64> = half.iter().zip(w).map(|(a, b)| a + b).collect();
        let u2: Vec<f64> = half.iter().zip(w).map(|(a, b)| a - b).collect();
        if norm(&u1) == 0.0 || norm(&u2) == 0.0 {
            return f64::INFINITY;
        }
        let mut g1 = vec![0.0; d];
        let mut g2 = vec![0.0; d];
        let (h1, _) = k.support_into(&u1, &mut g1);
        let (h2, _) = t.support_into(&u2, &mut g2);
        for i in 0..d {
            g[i] = g1[i] - g2[i];
        }
        h1 + h2
    };
    let cfg = LbfgsConfig {
        grad_tol: 1e-13,
        max_iter: 1000,
        ..Default::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for frac in [-0.45, 0.0, 0.45] {
        let w0: Vec<f64> = u.iter().map(|v| frac * v).collect();
        let out = optim::minimize(split_value, &w0, &cfg);
        if best.as_ref().is_none_or(|b| out.value < b.0) {
            best = Some((out.value, out.x));
        }
    }
    let (upper, w) = best.expect("three starts");
    let u1: Vec<f64> = half.iter().zip(&w).map(|(a, b)| a + b).collect();
    let u2: Vec<f64> = half.iter().zip(&w).map(|(a, b)| a - b).collect();

    let mut lower = f64::NEG_INFINITY;
    let mut point = Vec::new();
    for (own, other, dir) in [(k, t, &u1), (t, k, &u2)] {
        if norm(dir) == 0.0 {
            continue;
        }
        let y = own.support(dir)?.gradient;
        let g = other.gauge(&y)?.value.max(1.0);
        let y: Vec<f64> = y.iter().map(|v| v / g).collect();
        let val = dot(&y, u);
        if val > lower {
            lower = val;
            point = y;
        }
    }
    let gap = (upper - lower).max(0.0);
    if gap > tol * upper.abs().max(1.0) {
        return Err(Error::NotConverged { best: upper, gap });
    }
    Ok(IntersectionSupport {
        value: upper,
        point,
        gap,
        split: u1,
    })
}

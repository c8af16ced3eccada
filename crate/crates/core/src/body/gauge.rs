use minilp::{ComparisonOp, OptimizationDirection, Problem};

use super::{Body, Quadric};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::optim::{self, LbfgsConfig};

/// Gauge value `‖x‖_K` with its gradient when available.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeEval {
    pub value: f64,
    /// `∇‖x‖_K`, equal to `u*/h_K(u*)` for the maximizing direction `u*`.
    pub gradient: Option<Vec<f64>>,
    /// Closed form (ellipsoidal chains) or exact LP (polytopes).
    pub analytic: bool,
    /// Scale-free stationarity of the dual maximization; zero for analytic
    /// routes.
    pub tolerance: f64,
}

/// Dual-ascent tolerance for composites without a closed-form gauge.
pub const GAUGE_TOL: f64 = 1e-8;

impl Quadric {
    fn gauge(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d = x.len();
        let px: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|k| self.form[(i, k)] * x[k]).sum())
            .collect();
        let pc: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|k| self.form[(i, k)] * self.center[k]).sum())
            .collect();
        let a = 1.0 - dot(&self.center, &pc);
        let b = dot(&pc, x);
        let c = dot(&px, x);
        let r = (-b + (b * b + a * c).sqrt()) / a;
        // Outer normal at the boundary point y = x / r.
        let n: Vec<f64> = px.iter().zip(&pc).map(|(p, q)| p / r - q).collect();
        let ny = dot(&n, x) / r;
        (r, n.iter().map(|v| v / ny).collect())
    }
}

fn polytope_gauge(vertices: &[f64], count: usize, x: &[f64]) -> Option<(f64, Vec<f64>)> {
    // ‖x‖ = max <x, u> subject to <v_i, u> <= 1; the maximizer is the gradient.
    let d = x.len();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let u: Vec<_> = x
        .iter()
        .map(|&xi| lp.add_var(xi, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for i in 0..count {
        let row: Vec<_> = u
            .iter()
            .enumerate()
            .map(|(k, &var)| (var, vertices[i * d + k]))
            .collect();
        lp.add_constraint(&row, ComparisonOp::Le, 1.0);
    }
    let sol = lp.solve().ok()?;
    let grad: Vec<f64> = u.iter().map(|&var| sol[var]).collect();
    Some((dot(&grad, x), grad))
}

impl Body {
    /// `‖x‖_K = inf{r > 0 : x/r ∈ K}`, which equals `h_{K°}(x)`.
    pub fn gauge(&self, x: &[f64]) -> Result<GaugeEval> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if x.iter().all(|&v| v == 0.0) {
            return Ok(GaugeEval {
                value: 0.0,
                gradient: None,
                analytic: true,
                tolerance: 0.0,
            });
        }
        if let Some(q) = &self.quadric {
            let (value, grad) = q.gauge(x);
            return Ok(GaugeEval {
                value,
                gradient: Some(grad),
                analytic: true,
                tolerance: 0.0,
            });
        }
        if let Some((v, m)) = self.vertex_table() {
            if let Some((value, grad)) = polytope_gauge(&v, m, x) {
                return Ok(GaugeEval {
                    value,
                    gradient: Some(grad),
                    analytic: true,
                    tolerance: 0.0,
                });
            }
        }
        Ok(self.gauge_by_duality(x))
    }

    /// Maximizes `<x, u> / h_K(u)` over directions. The ratio is
    /// quasi-concave on `{<x,u> > 0}`, so local maxima are global.
    fn gauge_by_duality(&self, x: &[f64]) -> GaugeEval {
        let d = self.dim;
        let cfg = LbfgsConfig {
            grad_tol: GAUGE_TOL * 1e-2,
            max_iter: 400,
            ..Default::default()
        };
        let objective = |u: &[f64], g: &mut [f64]| {
            if norm(u) == 0.0 {
                return f64::INFINITY;
            }
            let mut hg = vec![0.0; d];
            let (h, _) = self.support_into(u, &mut hg);
            let xu = dot(x, u);
            for i in 0..d {
                g[i] = -(x[i] / h - xu * hg[i] / (h * h));
            }
            -xu / h
        };
        let xn = norm(x);
        let mut starts = vec![x.iter().map(|v| v / xn).collect::<Vec<f64>>()];
        // Second start, tilted off the radial direction.
        let mut tilted = starts[0].clone();
        for (i, t) in tilted.iter_mut().enumerate() {
            *t += 0.25 * if i % 2 == 0 { 1.0 } else { -1.0 } / (d as f64).sqrt();
        }
        starts.push(tilted);

        let mut best: Option<optim::Outcome> = None;
        for s in &starts {
            let out = optim::minimize(objective, s, &cfg);
            if best.as_ref().is_none_or(|b| out.value < b.value) {
                best = Some(out);
            }
        }
        let best = best.expect("at least one start");
        let u = &best.x;
        let mut hg = vec![0.0; d];
        let (h, _) = self.support_into(u, &mut hg);
        GaugeEval {
            value: -best.value,
            gradient: Some(u.iter().map(|v| v / h).collect()),
            analytic: false,
            tolerance: best.rel_grad,
        }
    }

    /// Gradient of `‖·‖_K^q` at `x`.
    pub fn gauge_power_gradient(&self, x: &[f64], q: f64) -> Result<Vec<f64>> {
        let g = self.gauge(x)?;
        let grad = g
            .gradient
            .ok_or_else(|| Error::NonSmooth("gauge gradient at the origin".into()))?;
        let s = q * g.value.powf(q - 1.0);
        Ok(grad.iter().map(|v| s * v).collect())
    }
}

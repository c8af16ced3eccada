//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! Objectives may return `f64::INFINITY` to mark points outside their domain
//! (for example loops with non-positive action); the line search treats such
//! trial points as a failed sufficient-decrease test and shrinks the step.

use std::collections::VecDeque;

#[derive(Clone, Copy, Debug)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when `‖g‖·max(‖x‖, 1) <= grad_tol·max(|f|, 1e-300)`.
    pub grad_tol: f64,
    /// Sufficient-decrease (Armijo) constant.
    pub armijo: f64,
    /// Curvature constant of the strong Wolfe conditions.
    pub wolfe: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 500,
            grad_tol: 1e-9,
            armijo: 1e-4,
            wolfe: 0.9,
            max_line_search: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterations,
    /// The line search could not decrease the objective any further.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    /// Scale-free gradient measure used by the stopping test.
    pub rel_grad: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: Status,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn rel_grad(x: &[f64], f: f64, g: &[f64]) -> f64 {
    norm(g) * norm(x).max(1.0) / f.abs().max(1e-300)
}

struct Probe<'a, F> {
    f: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    xt: Vec<f64>,
    gt: Vec<f64>,
    evaluations: usize,
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Probe<'_, F> {
    /// Value and directional derivative at step `a`.
    fn at(&mut self, a: f64) -> (f64, f64) {
        for ((xt, x), d) in self.xt.iter_mut().zip(self.x).zip(self.d) {
            *xt = x + a * d;
        }
        self.evaluations += 1;
        let v = (self.f)(&self.xt, &mut self.gt);
        if !v.is_finite() {
            return (f64::INFINITY, f64::NAN);
        }
        (v, dot(&self.gt, self.d))
    }
}

/// Cubic interpolation minimizer on `[lo, hi]` with bisection fallback.
fn interpolate(a0: f64, f0: f64, d0: f64, a1: f64, f1: f64, d1: f64) -> f64 {
    let (lo, hi) = if a0 < a1 { (a0, a1) } else { (a1, a0) };
    let fallback = 0.5 * (a0 + a1);
    if !(f1.is_finite() && d1.is_finite()) {
        // Right end lies outside the domain.
        return fallback;
    }
    let d_1 = d0 + d1 - 3.0 * (f0 - f1) / (a0 - a1);
    let disc = d_1 * d_1 - d0 * d1;
    if disc < 0.0 {
        return fallback;
    }
    let d_2 = (a1 - a0).signum() * disc.sqrt();
    let a = a1 - (a1 - a0) * (d1 + d_2 - d_1) / (d1 - d0 + 2.0 * d_2);
    let width = hi - lo;
    if !a.is_finite() || a <= lo + 0.05 * width || a >= hi - 0.05 * width {
        fallback
    } else {
        a
    }
}

/// Strong-Wolfe line search (bracketing then zoom). Returns the accepted step
/// and leaves the point, value and gradient in the probe buffers.
fn line_search<F: FnMut(&[f64], &mut [f64]) -> f64>(
    probe: &mut Probe<'_, F>,
    f0: f64,
    d0: f64,
    a_init: f64,
    cfg: &LbfgsConfig,
) -> Option<(f64, f64)> {
    let c1 = cfg.armijo;
    let c2 = cfg.wolfe;
    let mut a_prev = 0.0;
    let mut f_prev = f0;
    let mut d_prev = d0;
    let mut a = a_init;
    let mut budget = cfg.max_line_search;
    // Near the minimum, value differences drown in round-off; accept steps
    // whose value is flat to working precision and whose slope has shrunk.
    let noise = 1e-14 * f0.abs();
    let approx_wolfe = |fa: f64, da: f64| {
        fa.is_finite() && fa <= f0 + noise && da >= c2 * d0 && da <= (1.0 - 2.0 * c1) * -d0
    };

    let zoom = |probe: &mut Probe<'_, F>,
                mut lo: (f64, f64, f64),
                mut hi: (f64, f64, f64),
                budget: &mut usize|
     -> Option<(f64, f64)> {
        while *budget > 0 {
            *budget -= 1;
            let a = interpolate(lo.0, lo.1, lo.2, hi.0, hi.1, hi.2);
            let (fa, da) = probe.at(a);
            if approx_wolfe(fa, da) {
                return Some((a, fa));
            }
            if !fa.is_finite() || fa > f0 + c1 * a * d0 || fa >= lo.1 {
                hi = (a, fa, da);
            } else {
                if da.abs() <= -c2 * d0 {
                    return Some((a, fa));
                }
                if da * (hi.0 - lo.0) >= 0.0 {
                    hi = lo;
                }
                lo = (a, fa, da);
            }
            if (hi.0 - lo.0).abs() <= 1e-16 * lo.0.abs().max(1e-300) {
                break;
            }
        }
        // Fall back to the best sufficient-decrease point seen.
        if lo.0 > 0.0 && lo.1 < f0 {
            let (fa, _) = probe.at(lo.0);
            return Some((lo.0, fa));
        }
        None
    };

    let mut first = true;
    while budget > 0 {
        budget -= 1;
        let (fa, da) = probe.at(a);
        if approx_wolfe(fa, da) && fa > f0 + c1 * a * d0 {
            return Some((a, fa));
        }
        if !fa.is_finite() || fa > f0 + c1 * a * d0 || (!first && fa >= f_prev) {
            return zoom(probe, (a_prev, f_prev, d_prev), (a, fa, da), &mut budget);
        }
        if da.abs() <= -c2 * d0 {
            return Some((a, fa));
        }
        if da >= 0.0 {
            return zoom(probe, (a, fa, da), (a_prev, f_prev, d_prev), &mut budget);
        }
        a_prev = a;
        f_prev = fa;
        d_prev = da;
        a *= 2.0;
        first = false;
    }
    None
}

/// Minimizes `f` starting from `x0`. The closure writes the gradient into its
/// second argument and returns the value.
pub fn minimize<F>(mut f: F, x0: &[f64], cfg: &LbfgsConfig) -> Outcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut value = f(&x, &mut g);
    let mut evaluations = 1;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut dir = vec![0.0; n];
    let mut alpha = vec![0.0; cfg.memory];
    let mut status = Status::MaxIterations;
    let mut iterations = 0;
    let mut flat = 0;

    if !value.is_finite() {
        return Outcome {
            rel_grad: f64::INFINITY,
            x,
            value,
            grad: g,
            iterations,
            evaluations,
            status: Status::Stalled,
        };
    }

    while iterations < cfg.max_iter {
        if rel_grad(&x, value, &g) <= cfg.grad_tol {
            status = Status::Converged;
            break;
        }
        iterations += 1;

        // Two-loop recursion.
        dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi);
        for (i, (s, y, rho)) in history.iter().enumerate().rev() {
            let a = rho * dot(s, &dir);
            alpha[i] = a;
            dir.iter_mut().zip(y).for_each(|(d, yi)| *d -= a * yi);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            dir.iter_mut().for_each(|d| *d *= gamma);
        }
        for (i, (s, y, rho)) in history.iter().enumerate() {
            let b = rho * dot(y, &dir);
            dir.iter_mut()
                .zip(s)
                .for_each(|(d, si)| *d += (alpha[i] - b) * si);
        }
        let mut d0 = dot(&g, &dir);
        if !(d0 < 0.0) {
            history.clear();
            dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi);
            d0 = dot(&g, &dir);
        }
        let a_init = if history.is_empty() {
            (1.0 / norm(&dir)).min(1.0) * norm(&x).max(1e-3)
        } else {
            1.0
        };

        let mut probe = Probe {
            f: &mut f,
            x: &x,
            d: &dir,
            xt: vec![0.0; n],
            gt: vec![0.0; n],
            evaluations: 0,
        };
        let accepted = line_search(&mut probe, value, d0, a_init, cfg);
        evaluations += probe.evaluations;
        let Some((_, f_new)) = accepted else {
            if history.is_empty() {
                status = Status::Stalled;
                break;
            }
            history.clear();
            continue;
        };
        let Probe { xt, gt, .. } = probe;
        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let decrease = value - f_new;
        let g_before = norm(&g);
        x = xt;
        g = gt;
        value = f_new;
        if sy > 1e-300 {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        if decrease <= 1e-15 * value.abs() && norm(&g) >= 0.5 * g_before {
            flat += 1;
            if flat >= 5 {
                status = Status::Stalled;
                break;
            }
        } else {
            flat = 0;
        }
    }

    Outcome {
        rel_grad: rel_grad(&x, value, &g),
        x,
        value,
        grad: g,
        iterations,
        evaluations,
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2) + 1.0
        };
        let out = minimize(f, &[-1.2, 1.0], &LbfgsConfig::default());
        assert_eq!(out.status, Status::Converged);
        assert!((out.x[0] - 1.0).abs() < 1e-7 && (out.x[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn respects_infinite_barrier() {
        // Minimum of (x-2)^2 restricted to x < 1 is approached but never crossed.
        let f = |x: &[f64], g: &mut [f64]| {
            if x[0] >= 1.0 {
                return f64::INFINITY;
            }
            g[0] = 2.0 * (x[0] - 2.0) + 1e-3 / (1.0 - x[0]);
            (x[0] - 2.0).powi(2) - 1e-3 * (1.0 - x[0]).ln()
        };
        let out = minimize(f, &[0.0], &LbfgsConfig::default());
        assert!(out.x[0] < 1.0);
        assert!(out.rel_grad < 1e-6, "{out:?}");
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let scales = [1.0, 10.0, 100.0, 1e3, 1e4];
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 1.0;
            for i in 0..x.len() {
                g[i] = scales[i] * x[i];
                v += 0.5 * scales[i] * x[i] * x[i];
            }
            v
        };
        let out = minimize(f, &[1.0; 5], &LbfgsConfig::default());
        assert_eq!(out.status, Status::Converged, "{out:?}");
        assert!(out.x.iter().all(|v| v.abs() < 1e-8));
    }
}

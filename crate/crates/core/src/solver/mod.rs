//! EHZ capacity by minimizing the dual action functional
//! `I_p(z) = ∫ h_K^p(ż) dt` over zero-mean loops of action one.
//!
//! The constrained problem is replaced by the 0-homogeneous quotient
//! `Q_p(z) = mean_t h_K^p(ż) / A(z)^{p/2}`, minimized by L-BFGS from several
//! starts. With `λ = 2π min Q_p` the capacity is `c = (π^{p-1} λ / 2)^{2/p}`.

mod carrier;
mod certify;
mod polytope;

pub(crate) use carrier::{characteristic_residual, phase_aligned_distance};
pub use carrier::{circle_deviation, euler_residual, from_carrier, to_carrier, Carrier, CarrierFit};
pub use certify::{certify, CertificateBundle, PConsistency, CROSS_EXPONENTS};
pub use polytope::{extrapolated_polytope_capacity, ExtrapolatedCapacity, LadderPoint};

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::error::{Error, Result};
use crate::loops::{FourierLoop, Grid};
use crate::optim::{self, LbfgsConfig, Status};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub p: f64,
    pub modes: usize,
    /// Grid size; `None` means `4 * modes`.
    pub nodes: Option<usize>,
    pub starts: usize,
    pub seed: u64,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub memory: usize,
    pub armijo: f64,
    pub wolfe: f64,
    /// Re-solve at `2 * modes` and report the drift.
    pub stability_check: bool,
    /// Certificate tolerance gating `converged` for analytic smooth bodies.
    pub cert_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            modes: 16,
            nodes: None,
            starts: 8,
            seed: 0,
            grad_tol: 1e-9,
            max_iter: 500,
            memory: 10,
            armijo: 1e-4,
            wolfe: 0.9,
            stability_check: false,
            cert_tol: 1e-5,
        }
    }
}

impl SolveConfig {
    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn grid_nodes(&self) -> usize {
        self.nodes.unwrap_or(4 * self.modes)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::invalid("p", "exponent must exceed 1"));
        }
        if self.modes == 0 {
            return Err(Error::invalid("modes", "need at least one mode"));
        }
        if self.starts == 0 {
            return Err(Error::invalid("starts", "need at least one start"));
        }
        if !(self.grad_tol > 0.0) || !(self.cert_tol > 0.0) {
            return Err(Error::invalid("tol", "tolerances must be positive"));
        }
        if self.max_iter == 0 || self.memory == 0 {
            return Err(Error::invalid("max_iter", "iteration limits must be positive"));
        }
        let needed = 4 * self.modes;
        if self.grid_nodes() < needed {
            return Err(Error::GridTooSmall {
                nodes: self.grid_nodes(),
                modes: self.modes,
                needed,
            });
        }
        Ok(())
    }

    fn lbfgs(&self) -> LbfgsConfig {
        LbfgsConfig {
            memory: self.memory,
            max_iter: self.max_iter,
            grad_tol: self.grad_tol,
            armijo: self.armijo,
            wolfe: self.wolfe,
            ..LbfgsConfig::default()
        }
    }
}

/// `c = (π^{p-1} λ / 2)^{2/p}`.
pub fn capacity_from_lambda(lambda: f64, p: f64) -> f64 {
    (PI.powf(p - 1.0) * lambda / 2.0).powf(2.0 / p)
}

/// Inverse of [`capacity_from_lambda`].
pub fn lambda_from_capacity(c: f64, p: f64) -> f64 {
    2.0 * c.powf(p / 2.0) / PI.powf(p - 1.0)
}

/// Grid evaluation of `mean_j h_K^p(ż(t_j))` and its coefficient gradient.
pub(crate) struct Functional<'a> {
    pub body: &'a Body,
    pub p: f64,
    pub grid: Grid,
    pub dim: usize,
    pub modes: usize,
}

impl<'a> Functional<'a> {
    pub fn new(body: &'a Body, p: f64, modes: usize, nodes: usize) -> Result<Self> {
        Ok(Self {
            body,
            p,
            grid: Grid::new(nodes, modes)?,
            dim: body.dim(),
            modes,
        })
    }

    /// Returns the mean, writing its gradient into `grad` (flat layout), or
    /// `None` at a direction where `h_K` is not differentiable.
    pub fn mean(&self, flat: &[f64], grad: &mut [f64]) -> Option<f64> {
        let d = self.dim;
        let m = self.modes;
        let n = self.grid.nodes();
        let (acos, asin) = flat.split_at(d * m);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut zdot = vec![0.0; d];
        let mut hg = vec![0.0; d];
        let mut total = 0.0;
        for j in 0..n {
            zdot.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..m {
                let (c, s) = self.grid.cs(j, k);
                let kf = (k + 1) as f64;
                for i in 0..d {
                    zdot[i] += kf * (asin[k * d + i] * c - acos[k * d + i] * s);
                }
            }
            if zdot.iter().all(|&v| v == 0.0) {
                return None;
            }
            let (h, smooth) = self.body.support_into(&zdot, &mut hg);
            if !smooth {
                return None;
            }
            let hp1 = h.powf(self.p - 1.0);
            total += hp1 * h;
            // g_j = p h^{p-1} ∇h / N; ∂/∂a_k = -k sin, ∂/∂b_k = k cos.
            let w = self.p * hp1 / n as f64;
            for k in 0..m {
                let (c, s) = self.grid.cs(j, k);
                let kf = (k + 1) as f64;
                for i in 0..d {
                    let g = w * hg[i];
                    grad[k * d + i] -= kf * s * g;
                    grad[d * m + k * d + i] += kf * c * g;
                }
            }
        }
        Some(total / n as f64)
    }

    /// `Q_p` and its gradient; `+∞` when the action is not positive.
    pub fn quotient(&self, flat: &[f64], grad: &mut [f64]) -> f64 {
        let z = FourierLoop::from_flat(self.dim, self.modes, flat);
        let a = z.action();
        if !(a > 0.0) {
            return f64::INFINITY;
        }
        let Some(mean) = self.mean(flat, grad) else {
            return f64::INFINITY;
        };
        let mut ga = vec![0.0; flat.len()];
        z.action_gradient(&mut ga);
        let half = self.p / 2.0;
        let ap = a.powf(half);
        let value = mean / ap;
        for (g, gai) in grad.iter_mut().zip(&ga) {
            *g = *g / ap - half * value / a * gai;
        }
        value
    }
}

/// `I_p(z)` by trapezoid quadrature and its gradient with respect to the
/// flat coefficient vector `[a_1..a_M, b_1..b_M]`.
pub fn objective(body: &Body, z: &FourierLoop, p: f64, nodes: usize) -> Result<(f64, Vec<f64>)> {
    if body.dim() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            found: z.dim(),
        });
    }
    if !body.is_smooth() {
        return Err(Error::NonSmooth(
            "objective needs a smooth body; wrap polytopes in `smoothed`".into(),
        ));
    }
    let f = Functional::new(body, p, z.modes(), nodes)?;
    let mut grad = vec![0.0; 2 * z.dim() * z.modes()];
    let mean = f
        .mean(&z.to_flat(), &mut grad)
        .ok_or_else(|| Error::NonSmooth("support function not differentiable along ż".into()))?;
    grad.iter_mut().for_each(|g| *g *= 2.0 * PI);
    Ok((2.0 * PI * mean, grad))
}

/// Per-start diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub index: usize,
    pub quotient: f64,
    pub lambda: f64,
    pub rel_grad: f64,
    pub iterations: usize,
    pub status: Status,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub lambda: f64,
    /// Minimizer normalized to action one.
    pub z: FourierLoop,
    pub best_start: usize,
    pub starts: Vec<StartRecord>,
}

/// Starts whose final scale-free gradient is below this are accepted even
/// when the line search stalled at round-off.
const ACCEPT_REL_GRAD: f64 = 1e-6;

fn start_loop(body: &Body, cfg: &SolveConfig, index: usize) -> FourierLoop {
    let n = body.planes();
    let dim = body.dim();
    let r = 1.0 / PI.sqrt();
    let base = FourierLoop::circle(dim, cfg.modes, index % n, r);
    if index < n {
        return base;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let mut flat = base.to_flat();
    let m = cfg.modes;
    for (i, v) in flat.iter_mut().enumerate() {
        let k = (i % (dim * m)) / dim + 1;
        let noise: f64 = StandardNormal.sample(&mut rng);
        *v += 0.3 * r * noise / (k * k) as f64;
    }
    FourierLoop::from_flat(dim, m, &flat)
}

fn run_start(f: &Functional<'_>, body: &Body, cfg: &SolveConfig, index: usize) -> (StartRecord, FourierLoop) {
    let mut z0 = start_loop(body, cfg, index);
    if z0.action() <= 0.0 {
        z0 = z0.time_reversed();
    }
    // Optimize over the coefficients of ż (a_k, b_k scaled by k). In these
    // variables the Hessian of Q_p at a circle has spectrum 1 - 1/k instead
    // of k² - k, so L-BFGS no longer fights an O(M²) condition number.
    let d = body.dim();
    let weights: Vec<f64> = (0..2 * d * cfg.modes)
        .map(|i| ((i % (d * cfg.modes)) / d + 1) as f64)
        .collect();
    let y0: Vec<f64> = z0.to_flat().iter().zip(&weights).map(|(x, w)| x * w).collect();
    let mut x = vec![0.0; y0.len()];
    let out = optim::minimize(
        |y, g| {
            x.iter_mut()
                .zip(y.iter().zip(&weights))
                .for_each(|(xi, (yi, w))| *xi = yi / w);
            let v = f.quotient(&x, g);
            g.iter_mut().zip(&weights).for_each(|(gi, w)| *gi /= w);
            v
        },
        &y0,
        &cfg.lbfgs(),
    );
    let flat: Vec<f64> = out.x.iter().zip(&weights).map(|(y, w)| y / w).collect();
    let z = FourierLoop::from_flat(d, cfg.modes, &flat);
    let accepted =
        out.value.is_finite() && (out.status == Status::Converged || out.rel_grad <= ACCEPT_REL_GRAD);
    (
        StartRecord {
            index,
            quotient: out.value,
            lambda: 2.0 * PI * out.value,
            rel_grad: out.rel_grad,
            iterations: out.iterations,
            status: out.status,
            accepted,
        },
        z,
    )
}

/// Multistart minimization of `Q_p`.
pub fn minimize(body: &Body, cfg: &SolveConfig) -> Result<Minimum> {
    cfg.validate()?;
    if !body.is_smooth() {
        return Err(Error::NonSmooth(
            "capacity needs a smooth body; wrap polytopes in `smoothed`".into(),
        ));
    }
    let f = Functional::new(body, cfg.p, cfg.modes, cfg.grid_nodes())?;
    let run = |i: usize| run_start(&f, body, cfg, i);

    #[cfg(feature = "parallel")]
    let results: Vec<(StartRecord, FourierLoop)> = {
        use rayon::prelude::*;
        (0..cfg.starts).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(StartRecord, FourierLoop)> = (0..cfg.starts).map(run).collect();

    // Lowest quotient wins; near-ties go to the lowest start index.
    let mut best: Option<usize> = None;
    for (i, (rec, _)) in results.iter().enumerate() {
        if !rec.accepted {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) => {
                let qb = results[b].0.quotient;
                if rec.quotient < qb - 1e-13 * qb.abs() {
                    best = Some(i);
                }
            }
        }
    }
    let Some(b) = best else {
        let (rec, _) = results
            .iter()
            .min_by(|a, b| a.0.quotient.total_cmp(&b.0.quotient))
            .expect("at least one start");
        return Err(Error::NoStartConverged {
            best_quotient: rec.quotient,
            grad_norm: rec.rel_grad,
        });
    };
    let z = results[b].1.normalize_action()?;
    // Re-evaluate on the normalized loop so λ and z agree exactly.
    let mut g = vec![0.0; 2 * body.dim() * cfg.modes];
    let q = f.quotient(&z.to_flat(), &mut g);
    Ok(Minimum {
        lambda: 2.0 * PI * q,
        z,
        best_start: b,
        starts: results.into_iter().map(|(r, _)| r).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub modes: usize,
    pub capacity: f64,
    pub rel_drift: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity: f64,
    pub lambda: f64,
    pub p: f64,
    pub modes: usize,
    pub nodes: usize,
    pub seed: u64,
    pub minimizer: FourierLoop,
    pub alpha: Vec<f64>,
    pub carrier: Carrier,
    pub certificates: CertificateBundle,
    pub per_start: Vec<StartRecord>,
    pub best_start: usize,
    pub converged: bool,
    pub stability: Option<Stability>,
}

/// Capacity, carrier and certificates of a smooth body.
pub fn capacity(body: &Body, cfg: &SolveConfig) -> Result<CapacityResult> {
    let min = minimize(body, cfg)?;
    let nodes = cfg.grid_nodes();
    let c = capacity_from_lambda(min.lambda, cfg.p);
    let (alpha, _) = euler_residual(body, &min.z, min.lambda, cfg.p, nodes)?;
    let carrier = to_carrier(&min.z, min.lambda, &alpha, cfg.p);
    let mut result = CapacityResult {
        capacity: c,
        lambda: min.lambda,
        p: cfg.p,
        modes: cfg.modes,
        nodes,
        seed: cfg.seed,
        minimizer: min.z,
        alpha,
        carrier,
        certificates: CertificateBundle::default(),
        per_start: min.starts,
        best_start: min.best_start,
        converged: true,
        stability: None,
    };
    result.certificates = certify(body, &result)?;
    if body.is_analytic_smooth() && !result.certificates.within(cfg.cert_tol) {
        result.converged = false;
    }
    if cfg.stability_check {
        let fine = SolveConfig {
            modes: 2 * cfg.modes,
            nodes: cfg.nodes.map(|n| 2 * n),
            stability_check: false,
            ..cfg.clone()
        };
        let m2 = minimize(body, &fine)?;
        let c2 = capacity_from_lambda(m2.lambda, cfg.p);
        result.stability = Some(Stability {
            modes: fine.modes,
            capacity: c2,
            rel_drift: (c2 - c).abs() / c,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests;

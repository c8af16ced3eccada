//! Euler equation, the map from minimizers to capacity carriers, and its
//! inverse.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::error::{Error, Result};
use crate::linalg::{dot, max_abs, norm};
use crate::loops::{FourierLoop, Grid};
use crate::symplectic::apply_j_into;

/// Closed loop `offset + shape(t)`; the shape has zero mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub offset: Vec<f64>,
    pub shape: FourierLoop,
}

impl Carrier {
    pub fn from_loop(shape: FourierLoop) -> Self {
        Self {
            offset: vec![0.0; shape.dim()],
            shape,
        }
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut x = self.shape.eval(t);
        x.iter_mut().zip(&self.offset).for_each(|(a, b)| *a += b);
        x
    }

    /// Translation does not change the action of a closed loop.
    pub fn action(&self) -> f64 {
        self.shape.action()
    }

    pub fn positions(&self, nodes: usize) -> Result<Vec<f64>> {
        let mut s = self.shape.sample(nodes)?;
        let d = self.dim();
        for row in s.positions.chunks_exact_mut(d) {
            row.iter_mut().zip(&self.offset).for_each(|(a, b)| *a += b);
        }
        Ok(s.positions)
    }

    /// `max_t |‖l(t)‖_K - 1|` over the grid.
    pub fn boundary_residual(&self, body: &Body, nodes: usize) -> Result<f64> {
        let pos = self.positions(nodes)?;
        let mut worst: f64 = 0.0;
        for x in pos.chunks_exact(self.dim()) {
            worst = worst.max((body.gauge(x)?.value - 1.0).abs());
        }
        Ok(worst)
    }

    /// Loop CSV (`t,z_1..,dz_1..`) of the carrier itself.
    pub fn to_csv(&self, nodes: usize, with_derivative: bool) -> Result<String> {
        let s = self.shape.sample(nodes)?;
        let d = self.dim();
        let mut out = String::from("t");
        for i in 1..=d {
            write!(out, ",z_{i}").unwrap();
        }
        if with_derivative {
            for i in 1..=d {
                write!(out, ",dz_{i}").unwrap();
            }
        }
        out.push('\n');
        for j in 0..s.nodes() {
            write!(out, "{:?}", s.times[j]).unwrap();
            for (v, o) in s.position(j).iter().zip(&self.offset) {
                write!(out, ",{:?}", v + o).unwrap();
            }
            if with_derivative {
                for v in s.derivative(j) {
                    write!(out, ",{v:?}").unwrap();
                }
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// `α = mean_t ∇h_K^p(ż)` and the relative residual of
/// `∇h_K^p(ż) = (p/2) λ J z + α` on the grid.
pub fn euler_residual(
    body: &Body,
    z: &FourierLoop,
    lambda: f64,
    p: f64,
    nodes: usize,
) -> Result<(Vec<f64>, f64)> {
    if body.dim() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            found: z.dim(),
        });
    }
    let s = z.sample(nodes)?;
    let d = z.dim();
    let mut grads = vec![0.0; nodes * d];
    let mut hg = vec![0.0; d];
    for j in 0..nodes {
        let (h, _) = body.support_into(s.derivative(j), &mut hg);
        let w = p * h.powf(p - 1.0);
        for i in 0..d {
            grads[j * d + i] = w * hg[i];
        }
    }
    let mut alpha = vec![0.0; d];
    for row in grads.chunks_exact(d) {
        alpha
            .iter_mut()
            .zip(row)
            .for_each(|(a, g)| *a += g / nodes as f64);
    }
    let mut jz = vec![0.0; d];
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for j in 0..nodes {
        apply_j_into(s.position(j), &mut jz);
        let mut r: f64 = 0.0;
        for i in 0..d {
            let rhs = 0.5 * p * lambda * jz[i];
            r = r.max((grads[j * d + i] - rhs - alpha[i]).abs());
            den = den.max(rhs.abs());
        }
        num = num.max(r);
    }
    Ok((alpha, num / den.max(1e-300)))
}

/// `l = (2π/λ)^{1/q} ((λ/2) J z + α/p)`.
pub fn to_carrier(z: &FourierLoop, lambda: f64, alpha: &[f64], p: f64) -> Carrier {
    let q = p / (p - 1.0);
    let scale = (2.0 * PI / lambda).powf(1.0 / q);
    Carrier {
        offset: alpha.iter().map(|a| scale * a / p).collect(),
        shape: z.rotated_by_j().scaled(scale * lambda / 2.0),
    }
}

#[derive(Clone, Debug)]
pub struct CarrierFit {
    /// Recovered minimizer (action one).
    pub z: FourierLoop,
    /// Constant in `l̇ = d J ∇(‖·‖_K^q)(l)`.
    pub d: f64,
    pub fit_residual: f64,
    pub reparametrized: bool,
}

struct SpeedFit {
    d: f64,
    residual: f64,
    /// `σ_j` with `l̇_j ≈ σ_j J w_j`.
    speeds: Vec<f64>,
}

fn fit_speed(body: &Body, carrier: &Carrier, q: f64, nodes: usize) -> Result<SpeedFit> {
    let d = carrier.dim();
    let s = carrier.shape.sample(nodes)?;
    let mut x = vec![0.0; d];
    let mut jw = vec![0.0; d];
    let mut rows = Vec::with_capacity(nodes);
    let (mut num, mut den) = (0.0, 0.0);
    let mut speeds = Vec::with_capacity(nodes);
    for j in 0..nodes {
        x.iter_mut()
            .zip(s.position(j).iter().zip(&carrier.offset))
            .for_each(|(a, (b, c))| *a = b + c);
        let w = body.gauge_power_gradient(&x, q)?;
        apply_j_into(&w, &mut jw);
        let ld = s.derivative(j);
        let a = dot(ld, &jw);
        let b = dot(&jw, &jw);
        num += a;
        den += b;
        speeds.push(a / b);
        rows.push((ld.to_vec(), jw.clone()));
    }
    let dfit = num / den;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (ld, jw) in &rows {
        for (a, b) in ld.iter().zip(jw) {
            worst = worst.max((a - dfit * b).abs());
        }
        scale = scale.max(max_abs(ld));
    }
    Ok(SpeedFit {
        d: dfit,
        residual: worst / scale.max(1e-300),
        speeds,
    })
}

/// Relative misfit of `l̇ = d J ∇(‖·‖_K^q)(l)` with the best constant `d`,
/// after reparametrizing the curve when the direct fit is poor.
pub(crate) fn characteristic_residual(body: &Body, carrier: &Carrier, q: f64, nodes: usize) -> Result<f64> {
    let direct = fit_speed(body, carrier, q, nodes)?.residual;
    if direct <= 1e-10 {
        return Ok(direct);
    }
    let dense = nodes.max(8 * carrier.shape.modes() + 1);
    let speeds = fit_speed(body, carrier, q, dense)?.speeds;
    let Ok(work) = reparametrize(carrier, &speeds) else {
        return Ok(direct);
    };
    Ok(direct.min(fit_speed(body, &work, q, nodes)?.residual))
}

/// Reparametrizes the carrier so that its speed along `J∇‖·‖^q` is constant.
fn reparametrize(carrier: &Carrier, speeds: &[f64]) -> Result<Carrier> {
    let n = speeds.len();
    if speeds.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::NotCharacteristic {
            residual: f64::INFINITY,
        });
    }
    let mean = speeds.iter().sum::<f64>() / n as f64;
    let modes = (n - 1) / 2;
    let grid = Grid::unchecked(n, modes);
    // σ(t)/σ̄ = 1 + Σ c_k cos kt + s_k sin kt.
    let mut c = vec![0.0; modes];
    let mut s = vec![0.0; modes];
    for (j, &sig) in speeds.iter().enumerate() {
        for k in 0..modes {
            let (ck, sk) = grid.cs(j, k);
            c[k] += 2.0 * sig / mean * ck / n as f64;
            s[k] += 2.0 * sig / mean * sk / n as f64;
        }
    }
    // New time τ(t) = t + Σ (c_k sin kt - s_k (cos kt - 1)) / k.
    let tau = |t: f64| -> (f64, f64) {
        let mut v = t;
        let mut dv = 1.0;
        for k in 0..modes {
            let kf = (k + 1) as f64;
            let (sn, cs) = (kf * t).sin_cos();
            v += (c[k] * sn - s[k] * (cs - 1.0)) / kf;
            dv += c[k] * cs + s[k] * sn;
        }
        (v, dv)
    };
    let d = carrier.dim();
    let mut samples = Vec::with_capacity(n * d);
    let mut t: f64 = 0.0;
    for i in 0..n {
        let target = 2.0 * PI * i as f64 / n as f64;
        for _ in 0..50 {
            let (v, dv) = tau(t);
            let step = (v - target) / dv;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        samples.extend(carrier.eval(t));
    }
    let mut offset = vec![0.0; d];
    for row in samples.chunks_exact(d) {
        offset.iter_mut().zip(row).for_each(|(o, v)| *o += v / n as f64);
    }
    let shape = FourierLoop::fit_samples(d, carrier.shape.modes(), &samples);
    Ok(Carrier { offset, shape })
}

/// Inverse of [`to_carrier`]: `z = J⁻¹((π d q)^{-1/2} (l - mean l))`.
///
/// `d` is recovered by least squares of `l̇` against `J ∇(‖·‖_K^q)(l)`. When
/// that fit is worse than `tol` the carrier is first reparametrized to
/// constant speed; if the fit still fails the loop is not a closed
/// characteristic.
pub fn from_carrier(body: &Body, carrier: &Carrier, p: f64, nodes: usize, tol: f64) -> Result<CarrierFit> {
    if body.dim() != carrier.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            found: carrier.dim(),
        });
    }
    let q = p / (p - 1.0);
    let mut work = carrier.clone();
    let mut fit = fit_speed(body, &work, q, nodes)?;
    let mut reparametrized = false;
    if fit.residual > tol {
        let dense = nodes.max(8 * work.shape.modes() + 1);
        let dense_fit = fit_speed(body, &work, q, dense)?;
        work = reparametrize(&work, &dense_fit.speeds)?;
        fit = fit_speed(body, &work, q, nodes)?;
        reparametrized = true;
        if fit.residual > tol {
            return Err(Error::NotCharacteristic {
                residual: fit.residual,
            });
        }
    }
    if !(fit.d > 0.0) {
        return Err(Error::NotCharacteristic {
            residual: fit.residual,
        });
    }
    // The closed form already has action one up to the error in `d`;
    // renormalizing removes that residue.
    let z = work
        .shape
        .scaled((PI * fit.d * q).powf(-0.5))
        .rotated_by_j_inv()
        .normalize_action()?;
    Ok(CarrierFit {
        z,
        d: fit.d,
        fit_residual: fit.residual,
        reparametrized,
    })
}

/// Smallest coefficient distance between `a` and phase shifts of `b` over a
/// grid of `steps` shifts refined by golden-section search. Returns
/// `(distance, shift)`.
pub(crate) fn phase_aligned_distance(a: &FourierLoop, b: &FourierLoop, steps: usize) -> (f64, f64) {
    let dist = |tau: f64| a.coefficient_distance(&b.phase_shifted(tau));
    let h = 2.0 * PI / steps as f64;
    let (mut best_t, mut best) = (0.0, f64::INFINITY);
    for i in 0..steps {
        let t = i as f64 * h;
        let v = dist(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_t - h, best_t + h);
    for _ in 0..100 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if dist(m1) < dist(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t = 0.5 * (lo + hi);
    let v = dist(t);
    if v < best {
        (v, t)
    } else {
        (best, best_t)
    }
}

/// Maximum pointwise distance of a carrier from the circle of radius `r`
/// in symplectic plane `plane`, after the best phase shift.
pub fn circle_deviation(carrier: &Carrier, plane: usize, radius: f64, nodes: usize) -> Result<f64> {
    let target = FourierLoop::circle(carrier.dim(), carrier.shape.modes(), plane, radius);
    let (_, tau) = phase_aligned_distance(&target, &carrier.shape, 256);
    let aligned = Carrier {
        offset: carrier.offset.clone(),
        shape: carrier.shape.phase_shifted(tau),
    };
    let a = aligned.positions(nodes)?;
    let b = target.sample(nodes)?.positions;
    let d = carrier.dim();
    let mut worst: f64 = 0.0;
    for (x, y) in a.chunks_exact(d).zip(b.chunks_exact(d)) {
        let diff: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
        worst = worst.max(norm(&diff));
    }
    Ok(worst)
}

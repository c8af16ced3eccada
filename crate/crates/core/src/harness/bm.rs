use nalgebra::{DMatrix, DVector};

use crate::body::Body;
use crate::error::Result;
use crate::solver::{capacity, characteristic_residual, phase_aligned_distance, Carrier, SolveConfig};

use super::InequalityReport;

/// `K +_p T`: the Minkowski sum for `p = 1`, the Firey p-sum otherwise.
pub fn p_sum(k: &Body, t: &Body, p: f64) -> Result<Body> {
    if p == 1.0 {
        Body::minkowski(vec![k.clone(), t.clone()], None)
    } else {
        Body::psum(p, vec![k.clone(), t.clone()])
    }
}

/// `c(K +_p T)^{p/2} >= c(K)^{p/2} + c(T)^{p/2}` with slack `rel_slack·rhs`.
pub fn bm_check(k: &Body, t: &Body, p: f64, cfg: &SolveConfig, rel_slack: f64) -> Result<InequalityReport> {
    let sum = p_sum(k, t, p)?;
    let rk = capacity(k, cfg)?;
    let rt = capacity(t, cfg)?;
    let rs = capacity(&sum, cfg)?;
    let e = p / 2.0;
    let lhs = rk.capacity.powf(e) + rt.capacity.powf(e);
    let rhs = rs.capacity.powf(e);
    Ok(
        InequalityReport::at_most("brunn_minkowski", lhs, rhs, rel_slack * rhs)
            .witness("p", p)
            .witness("capacity_k", rk.capacity)
            .witness("capacity_t", rt.capacity)
            .witness("capacity_sum", rs.capacity)
            .witness("converged", [rk.converged, rt.converged, rs.converged]),
    )
}

fn boundary_misfit(t: &Body, points: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let d = t.dim();
    let mut res = Vec::with_capacity(points.len() / d);
    let mut jac = Vec::with_capacity(points.len() / d);
    for x in points.chunks_exact(d) {
        let y: Vec<f64> = x.iter().zip(beta).map(|(a, b)| a + b).collect();
        let g = t.gauge(&y)?;
        let grad = match g.gradient {
            Some(v) => v,
            None => (0..d)
                .map(|i| {
                    let h = 1e-6;
                    let (mut a, mut b) = (y.clone(), y.clone());
                    a[i] += h;
                    b[i] -= h;
                    Ok((t.gauge(&a)?.value - t.gauge(&b)?.value) / (2.0 * h))
                })
                .collect::<Result<_>>()?,
        };
        res.push(g.value - 1.0);
        jac.push(grad);
    }
    Ok((res, jac))
}

/// Levenberg–Marquardt fit of the translation `β` so that `points + β` lies
/// on `∂T`. Returns `β` and `max |‖x + β‖_T - 1|`.
fn fit_translation(t: &Body, points: &[f64], beta0: &[f64]) -> Result<(Vec<f64>, f64)> {
    let d = t.dim();
    let sq = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut beta = beta0.to_vec();
    let (mut res, mut jac) = boundary_misfit(t, points, &beta)?;
    let mut mu = 1e-3;
    for _ in 0..200 {
        let mut jtj = DMatrix::<f64>::zeros(d, d);
        let mut jtr = DVector::<f64>::zeros(d);
        for (r, g) in res.iter().zip(&jac) {
            let gv = DVector::from_column_slice(g);
            jtj += &gv * gv.transpose();
            jtr += &gv * *r;
        }
        let scale = jtj.diagonal().max().max(1e-300);
        let mut improved = false;
        while mu < 1e12 {
            let mut damped = jtj.clone();
            for i in 0..d {
                damped[(i, i)] += mu * scale;
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b - s).collect();
            match boundary_misfit(t, points, &trial) {
                Ok((r2, j2)) if sq(&r2) < sq(&res) => {
                    beta = trial;
                    res = r2;
                    jac = j2;
                    mu = (mu * 0.1).max(1e-12);
                    improved = true;
                    break;
                }
                _ => mu *= 10.0,
            }
        }
        if !improved {
            break;
        }
    }
    let worst = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok((beta, worst))
}

/// Homothety certificate: the carrier `l_K` of `K` is transported to
/// `α l_K + β` with `α = (c(T)/c(K))^{1/2}` and `β` fitted so the curve lies
/// on `∂T`. The residual is the larger of the boundary misfit on `T` and the
/// misfit of the characteristic equation of `T`, so a small residual shows a
/// pair of homothetic carriers. The report passes when it is at most `tol`.
///
/// The directly computed carrier of `T`, aligned by a phase shift, is
/// reported as the witness `phase_residual`; it can be large when `T` has a
/// family of carriers.
pub fn equality_certificate(
    k: &Body,
    t: &Body,
    p: f64,
    cfg: &SolveConfig,
    tol: f64,
) -> Result<InequalityReport> {
    let rk = capacity(k, cfg)?;
    let rt = capacity(t, cfg)?;
    let alpha = (rt.capacity / rk.capacity).sqrt();
    let lk = &rk.carrier;
    let lt = &rt.carrier;
    let nodes = 4 * cfg.grid_nodes();

    let scaled_shape = lk.shape.scaled(alpha);
    let (_, tau) = phase_aligned_distance(&lt.shape, &scaled_shape, 512);
    let size = scaled_shape.coefficient_norm().max(1e-300);
    let phase_residual = lt.shape.coefficient_distance(&scaled_shape.phase_shifted(tau)) / size;

    let points = scaled_shape.sample(nodes)?.positions;
    let beta0: Vec<f64> = lt
        .offset
        .iter()
        .zip(&lk.offset)
        .map(|(a, b)| a - alpha * b)
        .collect();
    let (beta, boundary) = fit_translation(t, &points, &beta0)?;
    let candidate = Carrier {
        offset: beta.clone(),
        shape: scaled_shape,
    };
    // The carrier's time parametrization comes from the solver exponent.
    let characteristic = characteristic_residual(t, &candidate, cfg.q(), nodes)?;

    let residual = boundary.max(characteristic);
    Ok(
        InequalityReport::at_most("bm_equality_homothety", residual, tol, 0.0)
            .witness("p", p)
            .witness("alpha", alpha)
            .witness("beta", &beta)
            .witness("boundary_residual", boundary)
            .witness("characteristic_residual", characteristic)
            .witness("phase_residual", phase_residual)
            .witness("capacity_k", rk.capacity)
            .witness("capacity_t", rt.capacity),
    )
}

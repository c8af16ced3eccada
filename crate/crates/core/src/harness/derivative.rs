use crate::body::Body;
use crate::error::Result;
use crate::loops::LengthMode;
use crate::solver::{capacity, CapacityResult, SolveConfig};

use super::InequalityReport;

/// Step sizes for the one-sided difference quotients, largest first.
pub const DEFAULT_EPS_SCHEDULE: [f64; 4] = [0.5, 0.2, 0.1, 0.05];

/// Steps of the chain `√c(T) <= (c(K+εT)^{1/2} - c(K)^{1/2})/ε <= L/(2√c(K))`.
const CHAIN_EPS: [f64; 3] = [1.0, 0.5, 0.1];

/// Length of the carrier of `K` in the `J T°` metric, `∫ h_T(J⁻¹ l̇) dt`.
fn carrier_length(rk: &CapacityResult, t: &Body, cfg: &SolveConfig) -> Result<f64> {
    let nodes = (4 * cfg.grid_nodes()).max(256);
    Ok(rk
        .carrier
        .shape
        .length_in_gauge(t, nodes, LengthMode::JInverse, 1e-6)?
        .value)
}

fn shifted(k: &Body, t: &Body, eps: f64, cfg: &SolveConfig) -> Result<f64> {
    let sum = Body::minkowski(vec![k.clone(), t.clone()], Some(vec![1.0, eps]))?;
    Ok(capacity(&sum, cfg)?.capacity)
}

/// `4 c(K) c(T) <= L²` where `L` is the `J T°` length of the carrier of `K`,
/// together with the chain of bounds on the square-root difference quotient.
pub fn isoperimetric_check(
    k: &Body,
    t: &Body,
    cfg: &SolveConfig,
    rel_slack: f64,
) -> Result<Vec<InequalityReport>> {
    let rk = capacity(k, cfg)?;
    let ct = capacity(t, cfg)?.capacity;
    let ck = rk.capacity;
    let len = carrier_length(&rk, t, cfg)?;
    let lhs = 4.0 * ck * ct;
    let rhs = len * len;
    let mut out = vec![
        InequalityReport::at_most("isoperimetric", lhs, rhs, rel_slack * rhs)
            .witness("capacity_k", ck)
            .witness("capacity_t", ct)
            .witness("length", len),
    ];

    let upper = len / (2.0 * ck.sqrt());
    for eps in CHAIN_EPS {
        let ce = shifted(k, t, eps, cfg)?;
        let s = (ce.sqrt() - ck.sqrt()) / eps;
        out.push(
            InequalityReport::at_most(format!("iso_chain_lower[{eps}]"), ct.sqrt(), s, rel_slack * s)
                .witness("capacity_shifted", ce),
        );
        out.push(
            InequalityReport::at_most(format!("iso_chain_upper[{eps}]"), s, upper, rel_slack * upper)
                .witness("capacity_shifted", ce),
        );
    }
    Ok(out)
}

/// Difference quotients of `ε ↦ c(K + εT)` over `eps` (largest first).
///
/// Checks per step: `(c(K+εT) - c(K))/ε >= 2√(c(K)c(T))` and the square-root
/// quotient below `L/(2√c(K))`; across steps, the square-root quotient is
/// nonincreasing in `ε`. The derivative is estimated by linear extrapolation of
/// the last two quotients to `ε = 0` and compared with both bounds
/// `2√(c(K)c(T)) <= d_T c(K) <= L`.
pub fn directional_derivative(
    k: &Body,
    t: &Body,
    cfg: &SolveConfig,
    eps: &[f64],
    rel_slack: f64,
) -> Result<Vec<InequalityReport>> {
    let rk = capacity(k, cfg)?;
    let ck = rk.capacity;
    let ct = capacity(t, cfg)?.capacity;
    let len = carrier_length(&rk, t, cfg)?;
    let lower = 2.0 * (ck * ct).sqrt();
    let upper = len / (2.0 * ck.sqrt());

    let mut out = Vec::new();
    let mut quotients = Vec::with_capacity(eps.len());
    let mut roots = Vec::with_capacity(eps.len());
    for &e in eps {
        let ce = shifted(k, t, e, cfg)?;
        let q = (ce - ck) / e;
        let s = (ce.sqrt() - ck.sqrt()) / e;
        out.push(
            InequalityReport::at_most(format!("derivative_lower[{e}]"), lower, q, rel_slack * q)
                .witness("capacity_shifted", ce),
        );
        out.push(InequalityReport::at_most(
            format!("derivative_upper[{e}]"),
            s,
            upper,
            rel_slack * upper,
        ));
        quotients.push(q);
        roots.push(s);
    }
    for i in 1..eps.len() {
        out.push(InequalityReport::at_most(
            format!("derivative_monotone[{}->{}]", eps[i - 1], eps[i]),
            roots[i - 1],
            roots[i],
            rel_slack * roots[i],
        ));
    }
    if let [.., (e1, q1), (e2, q2)] = eps
        .iter()
        .copied()
        .zip(quotients.iter().copied())
        .collect::<Vec<_>>()[..]
    {
        let d = q2 - e2 * (q1 - q2) / (e1 - e2);
        out.push(
            InequalityReport::at_most("derivative_limit_lower", lower, d, rel_slack * d)
                .witness("quotients", &quotients)
                .witness("eps", eps),
        );
        out.push(
            InequalityReport::at_most("derivative_limit_upper", d, len, rel_slack * len)
                .witness("length", len),
        );
    }
    Ok(out)
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{euler_residual, CapacityResult};
use crate::body::Body;
use crate::error::Result;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PConsistency {
    pub p: f64,
    pub capacity: f64,
    pub rel_diff: f64,
}

/// Optimality diagnostics of a capacity solve. Every field is computed even
/// when the solve is rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateBundle {
    pub euler_residual_rel: f64,
    /// Coefficient of variation of `t ↦ h_K(ż*(t))`.
    pub support_const_cv: f64,
    pub support_mean: f64,
    /// `√c / π`, the value the constant must take at action one.
    pub support_expected: f64,
    pub support_mean_rel: f64,
    /// `max_t |‖l(t)‖_K - 1|`.
    pub boundary_residual: f64,
    /// `|A(l) - c| / c`.
    pub action_mismatch_rel: f64,
    /// Capacity recomputed from the same minimizer under other exponents.
    pub p_consistency: Vec<PConsistency>,
}

impl CertificateBundle {
    pub fn p_consistency_max(&self) -> f64 {
        self.p_consistency.iter().map(|c| c.rel_diff).fold(0.0, f64::max)
    }

    pub fn within(&self, tol: f64) -> bool {
        [
            self.euler_residual_rel,
            self.support_const_cv,
            self.support_mean_rel,
            self.boundary_residual,
            self.action_mismatch_rel,
            self.p_consistency_max(),
        ]
        .iter()
        .all(|&v| v <= tol)
    }
}

/// Exponents used for the p-consistency cross-check.
pub const CROSS_EXPONENTS: [f64; 3] = [1.0, 1.5, 3.0];

pub fn certify(body: &Body, result: &CapacityResult) -> Result<CertificateBundle> {
    let nodes = result.nodes;
    let z = &result.minimizer;
    let c = result.capacity;
    let (_, euler) = euler_residual(body, z, result.lambda, result.p, nodes)?;

    let s = z.sample(nodes)?;
    let h: Vec<f64> = (0..nodes).map(|j| body.h(s.derivative(j))).collect();
    let mean = h.iter().sum::<f64>() / nodes as f64;
    let var = h.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nodes as f64;
    let expected = c.sqrt() / PI;

    let boundary = result
        .carrier
        .boundary_residual(body, nodes)
        .unwrap_or(f64::INFINITY);
    let action = (result.carrier.action() - c).abs() / c;

    // c^{1/2} = π (mean h^{p'}(ż*))^{1/p'} for any exponent at the minimizer.
    let p_consistency = CROSS_EXPONENTS
        .iter()
        .map(|&q| {
            let m = h.iter().map(|v| v.powf(q)).sum::<f64>() / nodes as f64;
            let cap = (PI * m.powf(1.0 / q)).powi(2);
            PConsistency {
                p: q,
                capacity: cap,
                rel_diff: (cap - c).abs() / c,
            }
        })
        .collect();

    Ok(CertificateBundle {
        euler_residual_rel: euler,
        support_const_cv: var.sqrt() / mean,
        support_mean: mean,
        support_expected: expected,
        support_mean_rel: (mean - expected).abs() / expected,
        boundary_residual: boundary,
        action_mismatch_rel: action,
        p_consistency,
    })
}

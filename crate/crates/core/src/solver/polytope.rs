//! Capacity of a raw polytope from smoothed surrogates.
//!
//! Smoothing with sharpness `s` inflates the body by `O(1/s)` and the Fourier
//! truncation at `M` modes overestimates by `O(1/M²)`. Two Richardson steps,
//! first in `M` (pair `M, 2M`) and then in `s` (pair `s₁ < s₂`), remove both
//! leading terms.

use serde::{Deserialize, Serialize};

use super::{capacity_from_lambda, minimize, SolveConfig};
use crate::body::{Body, Kind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub sharpness: f64,
    pub modes: usize,
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolatedCapacity {
    pub estimate: f64,
    pub ladder: Vec<LadderPoint>,
    /// Mode-extrapolated capacity per sharpness.
    pub per_sharpness: Vec<(f64, f64)>,
}

/// Estimates `c(P)` from smoothed surrogates at sharpness `sharpness[0] <
/// sharpness[1]` and modes `cfg.modes`, `2 cfg.modes`.
pub fn extrapolated_polytope_capacity(
    polytope: &Body,
    cfg: &SolveConfig,
    sharpness: [f64; 2],
) -> Result<ExtrapolatedCapacity> {
    if !matches!(polytope.kind(), Kind::Polytope { .. }) {
        return Err(Error::invalid("body", "expected a polytope"));
    }
    let [s1, s2] = sharpness;
    if !(s1 > 1.0 && s2 > s1) {
        return Err(Error::invalid("sharpness", "need 1 < s1 < s2"));
    }
    let mut ladder = Vec::new();
    let mut per_sharpness = Vec::new();
    for s in [s1, s2] {
        let body = Body::smoothed(s, polytope.clone())?;
        let mut caps = [0.0; 2];
        for (i, modes) in [cfg.modes, 2 * cfg.modes].into_iter().enumerate() {
            let c = SolveConfig {
                modes,
                nodes: cfg.nodes.map(|n| n << i),
                stability_check: false,
                ..cfg.clone()
            };
            let m = minimize(&body, &c)?;
            caps[i] = capacity_from_lambda(m.lambda, c.p);
            ladder.push(LadderPoint {
                sharpness: s,
                modes,
                capacity: caps[i],
            });
        }
        per_sharpness.push((s, (4.0 * caps[1] - caps[0]) / 3.0));
    }
    let (e1, e2) = (per_sharpness[0].1, per_sharpness[1].1);
    let estimate = (s2 * e2 - s1 * e1) / (s2 - s1);
    Ok(ExtrapolatedCapacity {
        estimate,
        ladder,
        per_sharpness,
    })
}

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::solver::{capacity, SolveConfig};

use super::InequalityReport;

const SYMMETRY_PROBES: usize = 256;
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanWidthEstimate {
    /// `M*(K) = ∫_{S} h_K dσ`.
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

fn unit_direction(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&g);
        if n > 1e-12 {
            return g.into_iter().map(|v| v / n).collect();
        }
    }
}

/// Monte Carlo mean of `h_K` over the uniform sphere. `K` must be centrally
/// symmetric; this is probed on random directions first.
pub fn mean_width(k: &Body, samples: usize, seed: u64) -> Result<MeanWidthEstimate> {
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least 2 samples"));
    }
    let d = k.dim();
    let mut probe = ChaCha8Rng::seed_from_u64(seed);
    probe.set_stream(1);
    let mut asym: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for _ in 0..SYMMETRY_PROBES {
        let u = unit_direction(&mut probe, d);
        let v: Vec<f64> = u.iter().map(|x| -x).collect();
        let (a, b) = (k.h(&u), k.h(&v));
        asym = asym.max((a - b).abs());
        scale = scale.max(a.abs()).max(b.abs());
    }
    if asym > SYMMETRY_TOL * scale.max(1.0) {
        return Err(Error::Asymmetric { asymmetry: asym });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..samples {
        let u = unit_direction(&mut rng, d);
        let h = k.h(&u);
        let delta = h - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (h - mean);
    }
    let sd = (m2 / (samples - 1) as f64).sqrt();
    Ok(MeanWidthEstimate {
        estimate: mean,
        std_error: sd / (samples as f64).sqrt(),
        samples,
        seed,
    })
}

/// `c(K) <= π M*(K)²`. The Monte Carlo error enters the slack as the
/// first-order change of the right side over three standard errors.
pub fn mean_width_bound_check(
    k: &Body,
    cfg: &SolveConfig,
    samples: usize,
    seed: u64,
    rel_slack: f64,
) -> Result<InequalityReport> {
    let m = mean_width(k, samples, seed)?;
    let c = capacity(k, cfg)?.capacity;
    let rhs = PI * m.estimate * m.estimate;
    let mc = 2.0 * PI * m.estimate * 3.0 * m.std_error;
    Ok(
        InequalityReport::at_most("mean_width", c, rhs, rel_slack * rhs + mc)
            .witness("mean_width", m.estimate)
            .witness("std_error", m.std_error)
            .witness("samples", samples)
            .witness("capacity", c),
    )
}

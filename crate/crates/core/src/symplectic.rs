//! Standard symplectic structure on R^{2n}.
//!
//! Coordinates are interleaved as `(x_1, y_1, ..., x_n, y_n)`. The complex
//! structure rotates every `(x_j, y_j)` plane by a quarter turn,
//! `J(x, y) = (-y, x)`, and the symplectic form is `ω(u, v) = <Ju, v>`. With
//! these choices the counterclockwise unit circle encloses action `+π`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Number of symplectic planes together with the coordinate convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymplecticContext {
    planes: usize,
}

impl SymplecticContext {
    pub fn new(planes: usize) -> Self {
        assert!(planes > 0, "at least one symplectic plane");
        Self { planes }
    }

    /// Context for an even ambient dimension.
    pub fn for_dim(dim: usize) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::OddDimension {
                field: "dimension".into(),
                dim,
            });
        }
        Ok(Self::new(dim / 2))
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn dim(&self) -> usize {
        2 * self.planes
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn apply_j(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let mut out = vec![0.0; v.len()];
        apply_j_into(v, &mut out);
        Ok(out)
    }

    /// `J^{-1} v = -J v`.
    pub fn apply_j_inv(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let mut out = vec![0.0; v.len()];
        apply_j_inv_into(v, &mut out);
        Ok(out)
    }

    pub fn symplectic_form(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(omega(u, v))
    }

    pub fn j_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut j = DMatrix::zeros(d, d);
        for p in 0..self.planes {
            j[(2 * p, 2 * p + 1)] = -1.0;
            j[(2 * p + 1, 2 * p)] = 1.0;
        }
        j
    }

    /// `exp(J S)` for a random symmetric `S` with entries uniform in
    /// `[-magnitude, magnitude]`. Always symplectic: `Mᵀ J M = J`.
    pub fn random_symplectic(&self, seed: u64, magnitude: f64) -> DMatrix<f64> {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = DMatrix::zeros(d, d);
        for i in 0..d {
            for k in i..d {
                let e = if magnitude > 0.0 {
                    rng.random_range(-magnitude..=magnitude)
                } else {
                    0.0
                };
                s[(i, k)] = e;
                s[(k, i)] = e;
            }
        }
        (self.j_matrix() * s).exp()
    }

    /// `‖Mᵀ J M − J‖_∞`, zero for symplectic matrices.
    pub fn symplectic_defect(&self, m: &DMatrix<f64>) -> f64 {
        let j = self.j_matrix();
        (m.transpose() * &j * m - j).amax()
    }
}

#[inline]
pub(crate) fn apply_j_into(v: &[f64], out: &mut [f64]) {
    for (src, dst) in v.chunks_exact(2).zip(out.chunks_exact_mut(2)) {
        dst[0] = -src[1];
        dst[1] = src[0];
    }
}

#[inline]
pub(crate) fn apply_j_inv_into(v: &[f64], out: &mut [f64]) {
    for (src, dst) in v.chunks_exact(2).zip(out.chunks_exact_mut(2)) {
        dst[0] = src[1];
        dst[1] = -src[0];
    }
}

/// `ω(u, v) = <Ju, v>` without dimension checks.
#[inline]
pub(crate) fn omega(u: &[f64], v: &[f64]) -> f64 {
    u.chunks_exact(2)
        .zip(v.chunks_exact(2))
        .map(|(a, b)| -a[1] * b[0] + a[0] * b[1])
        .sum()
}

//! Truncated Fourier loops with zero mean,
//! `z(t) = Σ_{k=1..M} a_k cos(kt) + b_k sin(kt)` on `[0, 2π]`.
//!
//! The derivative is exact (`ż` has coefficients `(k b_k, -k a_k)`), the
//! action `½∫<Jz, ż>dt` is a closed-form quadratic in the coefficients, and
//! integrals of non-polynomial integrands use the periodic trapezoid rule on a
//! uniform grid.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::body::Body;
use crate::error::{Error, Result};
use crate::linalg::{dot, max_abs};
use crate::symplectic::{apply_j_into, apply_j_inv_into, omega};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FourierLoop {
    dim: usize,
    modes: usize,
    /// `a_k` stacked, `modes × dim`.
    cos: Vec<f64>,
    /// `b_k` stacked, `modes × dim`.
    sin: Vec<f64>,
}

/// Cosine/sine tables `cos(k t_j)`, `sin(k t_j)` for a uniform grid.
#[derive(Clone, Debug)]
pub struct Grid {
    nodes: usize,
    modes: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Grid {
    pub fn new(nodes: usize, modes: usize) -> Result<Self> {
        let needed = 4 * modes;
        if nodes < needed || nodes == 0 {
            return Err(Error::GridTooSmall { nodes, modes, needed });
        }
        Ok(Self::unchecked(nodes, modes))
    }

    pub(crate) fn unchecked(nodes: usize, modes: usize) -> Self {
        let mut cos = Vec::with_capacity(nodes * modes);
        let mut sin = Vec::with_capacity(nodes * modes);
        for j in 0..nodes {
            for k in 1..=modes {
                // Reduce k*j mod nodes so equal angles give bit-identical values.
                let phase = 2.0 * PI * ((k * j) % nodes) as f64 / nodes as f64;
                cos.push(phase.cos());
                sin.push(phase.sin());
            }
        }
        Grid {
            nodes,
            modes,
            cos,
            sin,
        }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn time(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.nodes as f64
    }

    #[inline]
    pub(crate) fn cs(&self, j: usize, k: usize) -> (f64, f64) {
        let i = j * self.modes + k;
        (self.cos[i], self.sin[i])
    }
}

/// Positions and derivatives on `t_j = 2πj/N`, row-major `N × dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSamples {
    pub dim: usize,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub derivatives: Vec<f64>,
}

impl GridSamples {
    pub fn nodes(&self) -> usize {
        self.times.len()
    }

    pub fn position(&self, j: usize) -> &[f64] {
        &self.positions[j * self.dim..(j + 1) * self.dim]
    }

    pub fn derivative(&self, j: usize) -> &[f64] {
        &self.derivatives[j * self.dim..(j + 1) * self.dim]
    }
}

/// Which length functional [`FourierLoop::length_in_gauge`] integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthMode {
    /// `∫ ‖γ̇‖_T dt`.
    Plain,
    /// `∫ h_T(J⁻¹ γ̇) dt`, the length with respect to `J T°`.
    JInverse,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LengthEstimate {
    /// Value on the refined (2N) grid.
    pub value: f64,
    pub coarse: f64,
    pub rel_diff: f64,
}

impl FourierLoop {
    pub fn zeros(dim: usize, modes: usize) -> Self {
        Self {
            dim,
            modes,
            cos: vec![0.0; dim * modes],
            sin: vec![0.0; dim * modes],
        }
    }

    /// From per-mode coefficient vectors `a_k`, `b_k` (k = 1..M).
    pub fn from_coefficients(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::invalid("coefficients", "need matching nonempty a, b"));
        }
        let dim = a[0].len();
        let mut out = Self::zeros(dim, a.len());
        for (k, (ak, bk)) in a.iter().zip(b).enumerate() {
            if ak.len() != dim || bk.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: ak.len().max(bk.len()),
                });
            }
            if ak.iter().chain(bk).any(|v| !v.is_finite()) {
                return Err(Error::invalid("coefficients", "non-finite coefficient"));
            }
            out.cos[k * dim..(k + 1) * dim].copy_from_slice(ak);
            out.sin[k * dim..(k + 1) * dim].copy_from_slice(bk);
        }
        Ok(out)
    }

    /// Counterclockwise circle `r(cos t, sin t)` in symplectic plane `plane`.
    pub fn circle(dim: usize, modes: usize, plane: usize, radius: f64) -> Self {
        let mut z = Self::zeros(dim, modes);
        z.cos[2 * plane] = radius;
        z.sin[2 * plane + 1] = radius;
        z
    }

    /// Flat coefficient vector `[a_1..a_M, b_1..b_M]`.
    pub fn from_flat(dim: usize, modes: usize, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), 2 * dim * modes);
        let (c, s) = flat.split_at(dim * modes);
        Self {
            dim,
            modes,
            cos: c.to_vec(),
            sin: s.to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.cos.clone();
        v.extend_from_slice(&self.sin);
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `a_k` for `k` in `1..=M`.
    pub fn a(&self, k: usize) -> &[f64] {
        &self.cos[(k - 1) * self.dim..k * self.dim]
    }

    /// `b_k` for `k` in `1..=M`.
    pub fn b(&self, k: usize) -> &[f64] {
        &self.sin[(k - 1) * self.dim..k * self.dim]
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for k in 1..=self.modes {
            let (s, c) = (k as f64 * t).sin_cos();
            for (o, (a, b)) in out.iter_mut().zip(self.a(k).iter().zip(self.b(k))) {
                *o += a * c + b * s;
            }
        }
        out
    }

    pub fn eval_derivative(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for k in 1..=self.modes {
            let kf = k as f64;
            let (s, c) = (kf * t).sin_cos();
            for (o, (a, b)) in out.iter_mut().zip(self.a(k).iter().zip(self.b(k))) {
                *o += kf * (b * c - a * s);
            }
        }
        out
    }

    pub fn sample(&self, nodes: usize) -> Result<GridSamples> {
        let grid = Grid::new(nodes, self.modes)?;
        Ok(self.sample_on(&grid))
    }

    pub(crate) fn sample_on(&self, grid: &Grid) -> GridSamples {
        assert_eq!(grid.modes, self.modes);
        let d = self.dim;
        let n = grid.nodes;
        let mut positions = vec![0.0; n * d];
        let mut derivatives = vec![0.0; n * d];
        for j in 0..n {
            let pos = &mut positions[j * d..(j + 1) * d];
            let der = &mut derivatives[j * d..(j + 1) * d];
            for k in 0..self.modes {
                let (c, s) = grid.cs(j, k);
                let kf = (k + 1) as f64;
                let a = &self.cos[k * d..(k + 1) * d];
                let b = &self.sin[k * d..(k + 1) * d];
                for i in 0..d {
                    pos[i] += a[i] * c + b[i] * s;
                    der[i] += kf * (b[i] * c - a[i] * s);
                }
            }
        }
        GridSamples {
            dim: d,
            times: (0..n).map(|j| grid.time(j)).collect(),
            positions,
            derivatives,
        }
    }

    /// `A(z) = ½∫<Jz, ż>dt = π Σ_k k <J a_k, b_k>`.
    pub fn action(&self) -> f64 {
        (1..=self.modes)
            .map(|k| k as f64 * omega(self.a(k), self.b(k)))
            .sum::<f64>()
            * PI
    }

    /// Trapezoid value of `½∫<Jz, ż>dt` (exact on grids with `N > 2M`).
    pub fn action_by_quadrature(&self, nodes: usize) -> Result<f64> {
        let s = self.sample(nodes)?;
        let mut jz = vec![0.0; self.dim];
        let mut total = 0.0;
        for j in 0..s.nodes() {
            apply_j_into(s.position(j), &mut jz);
            total += dot(&jz, s.derivative(j));
        }
        Ok(0.5 * total * 2.0 * PI / nodes as f64)
    }

    /// Gradient of [`Self::action`] in flat coefficient layout.
    pub(crate) fn action_gradient(&self, out: &mut [f64]) {
        let d = self.dim;
        let m = self.modes;
        let mut tmp = vec![0.0; d];
        for k in 1..=m {
            let w = PI * k as f64;
            // ∂/∂a_k = -πk J b_k, ∂/∂b_k = πk J a_k.
            apply_j_into(self.b(k), &mut tmp);
            for i in 0..d {
                out[(k - 1) * d + i] = -w * tmp[i];
            }
            apply_j_into(self.a(k), &mut tmp);
            for i in 0..d {
                out[m * d + (k - 1) * d + i] = w * tmp[i];
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            modes: self.modes,
            cos: self.cos.iter().map(|v| v * s).collect(),
            sin: self.sin.iter().map(|v| v * s).collect(),
        }
    }

    /// `t ↦ z(-t)`: negates every `b_k`, flipping the sign of the action.
    pub fn time_reversed(&self) -> Self {
        Self {
            dim: self.dim,
            modes: self.modes,
            cos: self.cos.clone(),
            sin: self.sin.iter().map(|v| -v).collect(),
        }
    }

    /// `t ↦ z(t + τ)`.
    pub fn phase_shifted(&self, tau: f64) -> Self {
        let mut out = self.clone();
        for k in 1..=self.modes {
            let (s, c) = (k as f64 * tau).sin_cos();
            let d = self.dim;
            for i in 0..d {
                let a = self.a(k)[i];
                let b = self.b(k)[i];
                out.cos[(k - 1) * d + i] = a * c + b * s;
                out.sin[(k - 1) * d + i] = b * c - a * s;
            }
        }
        out
    }

    /// Applies a linear map to every coefficient vector.
    pub fn mapped(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.nrows(),
            });
        }
        let apply = |src: &[f64]| -> Vec<f64> {
            src.chunks_exact(self.dim)
                .flat_map(|v| {
                    (0..self.dim)
                        .map(|i| (0..self.dim).map(|k| m[(i, k)] * v[k]).sum::<f64>())
                        .collect::<Vec<_>>()
                })
                .collect()
        };
        Ok(Self {
            dim: self.dim,
            modes: self.modes,
            cos: apply(&self.cos),
            sin: apply(&self.sin),
        })
    }

    /// `J z` coefficient-wise.
    pub fn rotated_by_j(&self) -> Self {
        let mut out = self.clone();
        for (src, dst) in self.cos.chunks_exact(2).zip(out.cos.chunks_exact_mut(2)) {
            apply_j_into(src, dst);
        }
        for (src, dst) in self.sin.chunks_exact(2).zip(out.sin.chunks_exact_mut(2)) {
            apply_j_into(src, dst);
        }
        out
    }

    /// `J⁻¹ z` coefficient-wise.
    pub fn rotated_by_j_inv(&self) -> Self {
        let mut out = self.clone();
        for (src, dst) in self.cos.chunks_exact(2).zip(out.cos.chunks_exact_mut(2)) {
            apply_j_inv_into(src, dst);
        }
        for (src, dst) in self.sin.chunks_exact(2).zip(out.sin.chunks_exact_mut(2)) {
            apply_j_inv_into(src, dst);
        }
        out
    }

    /// Truncates or zero-pads to `modes`.
    pub fn with_modes(&self, modes: usize) -> Self {
        let mut out = Self::zeros(self.dim, modes);
        let keep = modes.min(self.modes) * self.dim;
        out.cos[..keep].copy_from_slice(&self.cos[..keep]);
        out.sin[..keep].copy_from_slice(&self.sin[..keep]);
        out
    }

    /// Scales to action 1, time-reversing first when the action is negative.
    pub fn normalize_action(&self) -> Result<Self> {
        let a = self.action();
        let scale = max_abs(&self.cos).max(max_abs(&self.sin));
        if !(a.abs() > 1e-14 * scale * scale) || !a.is_finite() {
            return Err(Error::ZeroAction);
        }
        if a > 0.0 {
            Ok(self.scaled(a.powf(-0.5)))
        } else {
            Ok(self.time_reversed().scaled((-a).powf(-0.5)))
        }
    }

    pub fn coefficient_distance(&self, other: &Self) -> f64 {
        self.cos
            .iter()
            .zip(&other.cos)
            .chain(self.sin.iter().zip(&other.sin))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.cos
            .iter()
            .chain(&self.sin)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Length of the loop measured by `T`, on `nodes` and `2·nodes` points.
    /// Fails when the two trapezoid values differ by more than `tol`
    /// (relative).
    pub fn length_in_gauge(
        &self,
        body: &Body,
        nodes: usize,
        mode: LengthMode,
        tol: f64,
    ) -> Result<LengthEstimate> {
        if body.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: body.dim(),
                found: self.dim,
            });
        }
        let integrate = |n: usize| -> Result<f64> {
            let s = self.sample(n)?;
            let mut v = vec![0.0; self.dim];
            let mut total = 0.0;
            for j in 0..n {
                let d = s.derivative(j);
                if d.iter().all(|&x| x == 0.0) {
                    continue;
                }
                total += match mode {
                    LengthMode::Plain => body.gauge(d)?.value,
                    LengthMode::JInverse => {
                        apply_j_inv_into(d, &mut v);
                        body.h(&v)
                    }
                };
            }
            Ok(total * 2.0 * PI / n as f64)
        };
        let coarse = integrate(nodes)?;
        let fine = integrate(2 * nodes)?;
        let rel = (fine - coarse).abs() / fine.abs().max(1e-300);
        if rel > tol {
            return Err(Error::Quadrature { coarse, fine, rel });
        }
        Ok(LengthEstimate {
            value: fine,
            coarse,
            rel_diff: rel,
        })
    }

    /// CSV with header `t,z_1..z_d[,dz_1..dz_d]`, one row per grid node.
    pub fn to_csv(&self, nodes: usize, with_derivative: bool) -> Result<String> {
        let s = self.sample(nodes)?;
        let mut out = String::from("t");
        for i in 1..=self.dim {
            write!(out, ",z_{i}").unwrap();
        }
        if with_derivative {
            for i in 1..=self.dim {
                write!(out, ",dz_{i}").unwrap();
            }
        }
        out.push('\n');
        for j in 0..s.nodes() {
            write!(out, "{:?}", s.times[j]).unwrap();
            for v in s.position(j) {
                write!(out, ",{v:?}").unwrap();
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

    /// Least-squares Fourier fit of samples on a uniform grid (the mean is
    /// discarded). `samples` is row-major `N × dim` with `N > 2·modes`.
    pub fn fit_samples(dim: usize, modes: usize, samples: &[f64]) -> Self {
        let n = samples.len() / dim;
        let grid = Grid::unchecked(n, modes);
        let mut out = Self::zeros(dim, modes);
        for j in 0..n {
            let row = &samples[j * dim..(j + 1) * dim];
            for k in 0..modes {
                let (c, s) = grid.cs(j, k);
                for (i, r) in row.iter().enumerate() {
                    out.cos[k * dim + i] += 2.0 * r * c / n as f64;
                    out.sin[k * dim + i] += 2.0 * r * s / n as f64;
                }
            }
        }
        out
    }
}

//! Convex bodies described through their support functions.
//!
//! A [`Body`] is an immutable tree: analytic leaves (balls, ellipsoids,
//! polytopes) combined by p-sums, weighted Minkowski sums, linear images,
//! translations, dilations and polytope smoothing. Every body contains the
//! origin in its interior, which keeps `h_K(u) > 0` for `u != 0` and makes the
//! gauge `‖x‖_K` finite.

mod gauge;
mod intersection;
mod recipe;

pub use gauge::GaugeEval;
pub use intersection::{intersection_support, IntersectionSupport};
pub use recipe::Recipe;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// Default sharpness of the smoothed-polytope support function.
pub const DEFAULT_SHARPNESS: f64 = 64.0;

/// Support value and support point `∇h_K(u)` for one direction.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// `false` when the gradient is a selected subgradient (polytope vertex
    /// ties).
    pub smooth: bool,
}

#[derive(Clone, Debug)]
pub(crate) enum Kind {
    Ball {
        radius: f64,
    },
    /// Radii per symplectic plane, ascending.
    Ellipsoid {
        radii: Vec<f64>,
    },
    /// `K = {x : xᵀ Q⁻¹ x <= 1}`, so `h_K(u) = sqrt(uᵀ Q u)`.
    GeneralEllipsoid {
        form: DMatrix<f64>,
    },
    /// Row-major `count × dim` vertex table.
    Polytope {
        vertices: Vec<f64>,
        count: usize,
    },
    PSum {
        p: f64,
        terms: Vec<Body>,
    },
    Minkowski {
        weights: Vec<f64>,
        terms: Vec<Body>,
    },
    Linear {
        matrix: DMatrix<f64>,
        child: Box<Body>,
    },
    Translate {
        offset: Vec<f64>,
        child: Box<Body>,
    },
    Scale {
        factor: f64,
        child: Box<Body>,
    },
    Smoothed {
        sharpness: f64,
        child: Box<Body>,
    },
}

/// Affine ellipsoid `{x : (x - c)ᵀ P (x - c) <= 1}`; every chain of
/// ellipsoidal leaves under linear maps, translations and dilations reduces to
/// one, which gives the gauge in closed form.
#[derive(Clone, Debug)]
pub(crate) struct Quadric {
    pub center: Vec<f64>,
    pub form: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct Body {
    dim: usize,
    kind: Kind,
    quadric: Option<Quadric>,
}

fn check_even(field: &str, dim: usize) -> Result<()> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::OddDimension {
            field: field.into(),
            dim,
        });
    }
    Ok(())
}

fn check_finite(field: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(field, "non-finite entry"));
    }
    Ok(())
}

fn same_dim(terms: &[Body]) -> Result<usize> {
    let dim = terms[0].dim;
    for t in &terms[1..] {
        if t.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: t.dim,
            });
        }
    }
    Ok(dim)
}

impl Body {
    fn leaf(dim: usize, kind: Kind) -> Self {
        let mut body = Body {
            dim,
            kind,
            quadric: None,
        };
        body.quadric = body.derive_quadric();
        body
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        check_even("dim", dim)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("r", "radius must be positive"));
        }
        Ok(Self::leaf(dim, Kind::Ball { radius }))
    }

    /// Symplectic ellipsoid `Σ (x_j² + y_j²) / r_j² <= 1`.
    pub fn ellipsoid(radii: &[f64]) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::invalid("radii", "at least one radius"));
        }
        check_finite("radii", radii)?;
        if radii.iter().any(|&r| r <= 0.0) {
            return Err(Error::invalid("radii", "radii must be positive"));
        }
        if radii.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("radii", "radii must be sorted ascending"));
        }
        Ok(Self::leaf(
            2 * radii.len(),
            Kind::Ellipsoid {
                radii: radii.to_vec(),
            },
        ))
    }

    /// `K = {x : xᵀ Q⁻¹ x <= 1}` for symmetric positive-definite `Q`.
    pub fn general_ellipsoid(form: DMatrix<f64>) -> Result<Self> {
        if !form.is_square() {
            return Err(Error::invalid("Q", "matrix must be square"));
        }
        check_even("Q", form.nrows())?;
        check_finite("Q", form.as_slice())?;
        let scale = form.amax().max(1e-300);
        if (&form - form.transpose()).amax() > 1e-12 * scale {
            return Err(Error::NotPositiveDefinite { field: "Q".into() });
        }
        let sym = (&form + form.transpose()) * 0.5;
        if sym.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite { field: "Q".into() });
        }
        Ok(Self::leaf(sym.nrows(), Kind::GeneralEllipsoid { form: sym }))
    }

    /// Convex hull of the given vertices; the origin must be strictly inside.
    pub fn polytope(vertices: &[Vec<f64>]) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::invalid("vertices", "no vertices"));
        }
        let dim = vertices[0].len();
        check_even("vertices", dim)?;
        let mut flat = Vec::with_capacity(dim * vertices.len());
        for v in vertices {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            check_finite("vertices", v)?;
            flat.extend_from_slice(v);
        }
        if !origin_strictly_inside(&flat, vertices.len(), dim) {
            return Err(Error::OriginNotInterior {
                field: "vertices".into(),
            });
        }
        Ok(Self::leaf(
            dim,
            Kind::Polytope {
                vertices: flat,
                count: vertices.len(),
            },
        ))
    }

    /// Firey p-sum, `h = (Σ h_i^p)^{1/p}`.
    pub fn psum(p: f64, terms: Vec<Body>) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::invalid("p", "p-sum exponent must be >= 1"));
        }
        if terms.len() < 2 {
            return Err(Error::invalid("terms", "p-sum needs at least two terms"));
        }
        let dim = same_dim(&terms)?;
        Ok(Self::leaf(dim, Kind::PSum { p, terms }))
    }

    /// Weighted Minkowski sum, `h = Σ w_i h_i`.
    pub fn minkowski(terms: Vec<Body>, weights: Option<Vec<f64>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("terms", "Minkowski sum needs terms"));
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; terms.len()]);
        if weights.len() != terms.len() {
            return Err(Error::invalid("weights", "one weight per term"));
        }
        check_finite("weights", &weights)?;
        if weights.iter().any(|&w| w < 0.0) || weights.iter().all(|&w| w == 0.0) {
            return Err(Error::invalid(
                "weights",
                "weights must be nonnegative and not all zero",
            ));
        }
        let dim = same_dim(&terms)?;
        Ok(Self::leaf(dim, Kind::Minkowski { weights, terms }))
    }

    /// Image `A K` under an invertible matrix.
    pub fn linear(matrix: DMatrix<f64>, child: Body) -> Result<Self> {
        if matrix.nrows() != child.dim || matrix.ncols() != child.dim {
            return Err(Error::DimensionMismatch {
                expected: child.dim,
                found: matrix.nrows(),
            });
        }
        check_finite("matrix", matrix.as_slice())?;
        let det = matrix.determinant();
        if det.abs() <= 1e-14 * matrix.amax().powi(child.dim as i32) {
            return Err(Error::invalid("matrix", "matrix is singular"));
        }
        let dim = child.dim;
        Ok(Self::leaf(
            dim,
            Kind::Linear {
                matrix,
                child: Box::new(child),
            },
        ))
    }

    /// `K + x₀`; the translate must still contain the origin in its interior.
    pub fn translate(offset: Vec<f64>, child: Body) -> Result<Self> {
        if offset.len() != child.dim {
            return Err(Error::DimensionMismatch {
                expected: child.dim,
                found: offset.len(),
            });
        }
        check_finite("vector", &offset)?;
        let minus: Vec<f64> = offset.iter().map(|v| -v).collect();
        let g = child.gauge(&minus)?;
        if !(g.value < 1.0 - 1e-9) {
            return Err(Error::OriginNotInterior {
                field: "vector".into(),
            });
        }
        let dim = child.dim;
        Ok(Self::leaf(
            dim,
            Kind::Translate {
                offset,
                child: Box::new(child),
            },
        ))
    }

    pub fn scale(factor: f64, child: Body) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid("factor", "scale factor must be positive"));
        }
        let dim = child.dim;
        Ok(Self::leaf(
            dim,
            Kind::Scale {
                factor,
                child: Box::new(child),
            },
        ))
    }

    /// Smooth outer approximation of a polytope,
    /// `h_s(u) = (Σ_i max(<v_i, u>, 0)^s)^{1/s}`.
    pub fn smoothed(sharpness: f64, child: Body) -> Result<Self> {
        if !(sharpness > 1.0 && sharpness.is_finite()) {
            return Err(Error::invalid("sharpness", "sharpness must exceed 1"));
        }
        if !matches!(child.kind, Kind::Polytope { .. }) {
            return Err(Error::invalid(
                "body",
                "smoothing applies to polytope bodies only",
            ));
        }
        let dim = child.dim;
        Ok(Self::leaf(
            dim,
            Kind::Smoothed {
                sharpness,
                child: Box::new(child),
            },
        ))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn planes(&self) -> usize {
        self.dim / 2
    }

    pub(crate) fn kind(&self) -> &Kind {
        &self.kind
    }

    /// Vertices of a polytope leaf (row per vertex).
    pub fn vertices(&self) -> Option<Vec<Vec<f64>>> {
        match &self.kind {
            Kind::Polytope { vertices, .. } => {
                Some(vertices.chunks_exact(self.dim).map(<[f64]>::to_vec).collect())
            }
            _ => None,
        }
    }

    /// Whether the support function is differentiable away from the origin.
    pub fn is_smooth(&self) -> bool {
        match &self.kind {
            Kind::Polytope { .. } => false,
            Kind::Smoothed { .. } => true,
            Kind::PSum { terms, .. } => terms.iter().all(Body::is_smooth),
            Kind::Minkowski { terms, weights } => {
                terms.iter().zip(weights).all(|(t, &w)| w == 0.0 || t.is_smooth())
            }
            Kind::Linear { child, .. } | Kind::Translate { child, .. } | Kind::Scale { child, .. } => {
                child.is_smooth()
            }
            _ => true,
        }
    }

    /// Smooth with only ellipsoidal leaves (no polytopes, smoothed or not).
    pub fn is_analytic_smooth(&self) -> bool {
        match &self.kind {
            Kind::Polytope { .. } | Kind::Smoothed { .. } => false,
            Kind::PSum { terms, .. } | Kind::Minkowski { terms, .. } => {
                terms.iter().all(Body::is_analytic_smooth)
            }
            Kind::Linear { child, .. } | Kind::Translate { child, .. } | Kind::Scale { child, .. } => {
                child.is_analytic_smooth()
            }
            _ => true,
        }
    }

    pub fn support(&self, u: &[f64]) -> Result<SupportEval> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.len(),
            });
        }
        if u.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroDirection);
        }
        let mut gradient = vec![0.0; self.dim];
        let (value, smooth) = self.support_into(u, &mut gradient);
        Ok(SupportEval {
            value,
            gradient,
            smooth,
        })
    }

    /// Support value only.
    pub fn h(&self, u: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim];
        self.support_into(u, &mut g).0
    }

    /// Writes `∇h_K(u)` into `grad` and returns `(h_K(u), smooth)`. No checks;
    /// `u` must be nonzero with the body's dimension.
    pub(crate) fn support_into(&self, u: &[f64], grad: &mut [f64]) -> (f64, bool) {
        match &self.kind {
            Kind::Ball { radius } => {
                let n = norm(u);
                for (g, x) in grad.iter_mut().zip(u) {
                    *g = radius * x / n;
                }
                (radius * n, true)
            }
            Kind::Ellipsoid { radii } => {
                let mut s = 0.0;
                for (j, r) in radii.iter().enumerate() {
                    let r2 = r * r;
                    grad[2 * j] = r2 * u[2 * j];
                    grad[2 * j + 1] = r2 * u[2 * j + 1];
                    s += grad[2 * j] * u[2 * j] + grad[2 * j + 1] * u[2 * j + 1];
                }
                let h = s.sqrt();
                grad.iter_mut().for_each(|g| *g /= h);
                (h, true)
            }
            Kind::GeneralEllipsoid { form } => {
                let d = self.dim;
                let mut s = 0.0;
                for i in 0..d {
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc += form[(i, k)] * u[k];
                    }
                    grad[i] = acc;
                    s += acc * u[i];
                }
                let h = s.sqrt();
                grad.iter_mut().for_each(|g| *g /= h);
                (h, true)
            }
            Kind::Polytope { vertices, .. } => {
                let mut best = f64::NEG_INFINITY;
                let mut best_i = 0;
                let mut tied = false;
                for (i, v) in vertices.chunks_exact(self.dim).enumerate() {
                    let s = dot(v, u);
                    if s > best {
                        tied = s - best <= 1e-12 * s.abs().max(1.0);
                        best = s;
                        best_i = i;
                    } else if best - s <= 1e-12 * best.abs().max(1.0) {
                        tied = true;
                    }
                }
                grad.copy_from_slice(&vertices[best_i * self.dim..(best_i + 1) * self.dim]);
                (best, !tied)
            }
            Kind::Smoothed { sharpness, child } => {
                let Kind::Polytope { vertices, .. } = &child.kind else {
                    unreachable!("smoothed bodies wrap polytopes")
                };
                smoothed_support(vertices, self.dim, *sharpness, u, grad)
            }
            Kind::PSum { p, terms } => {
                let mut vals = Vec::with_capacity(terms.len());
                let mut grads = vec![0.0; terms.len() * self.dim];
                let mut smooth = true;
                for (t, g) in terms.iter().zip(grads.chunks_exact_mut(self.dim)) {
                    let (h, s) = t.support_into(u, g);
                    vals.push(h);
                    smooth &= s;
                }
                let top = vals.iter().cloned().fold(0.0, f64::max);
                let h = top * vals.iter().map(|v| (v / top).powf(*p)).sum::<f64>().powf(1.0 / p);
                grad.iter_mut().for_each(|g| *g = 0.0);
                for (v, g) in vals.iter().zip(grads.chunks_exact(self.dim)) {
                    let w = (v / h).powf(p - 1.0);
                    for (o, gi) in grad.iter_mut().zip(g) {
                        *o += w * gi;
                    }
                }
                (h, smooth)
            }
            Kind::Minkowski { weights, terms } => {
                let mut tmp = vec![0.0; self.dim];
                let mut h = 0.0;
                let mut smooth = true;
                grad.iter_mut().for_each(|g| *g = 0.0);
                for (t, &w) in terms.iter().zip(weights) {
                    if w == 0.0 {
                        continue;
                    }
                    let (v, s) = t.support_into(u, &mut tmp);
                    h += w * v;
                    smooth &= s;
                    for (o, gi) in grad.iter_mut().zip(&tmp) {
                        *o += w * gi;
                    }
                }
                (h, smooth)
            }
            Kind::Linear { matrix, child } => {
                let d = self.dim;
                let mut v = vec![0.0; d];
                for (k, vk) in v.iter_mut().enumerate() {
                    *vk = (0..d).map(|i| matrix[(i, k)] * u[i]).sum();
                }
                let mut g = vec![0.0; d];
                let (h, s) = child.support_into(&v, &mut g);
                for (i, gi) in grad.iter_mut().enumerate() {
                    *gi = (0..d).map(|k| matrix[(i, k)] * g[k]).sum();
                }
                (h, s)
            }
            Kind::Translate { offset, child } => {
                let (h, s) = child.support_into(u, grad);
                for (g, x) in grad.iter_mut().zip(offset) {
                    *g += x;
                }
                (h + dot(offset, u), s)
            }
            Kind::Scale { factor, child } => {
                let (h, s) = child.support_into(u, grad);
                grad.iter_mut().for_each(|g| *g *= factor);
                (factor * h, s)
            }
        }
    }

    fn derive_quadric(&self) -> Option<Quadric> {
        let d = self.dim;
        match &self.kind {
            Kind::Ball { radius } => Some(Quadric {
                center: vec![0.0; d],
                form: DMatrix::identity(d, d) / (radius * radius),
            }),
            Kind::Ellipsoid { radii } => {
                let mut form = DMatrix::zeros(d, d);
                for (j, r) in radii.iter().enumerate() {
                    form[(2 * j, 2 * j)] = 1.0 / (r * r);
                    form[(2 * j + 1, 2 * j + 1)] = 1.0 / (r * r);
                }
                Some(Quadric {
                    center: vec![0.0; d],
                    form,
                })
            }
            Kind::GeneralEllipsoid { form } => Some(Quadric {
                center: vec![0.0; d],
                form: form.clone().try_inverse()?,
            }),
            Kind::Linear { matrix, child } => {
                let q = child.quadric.as_ref()?;
                let inv = matrix.clone().try_inverse()?;
                let form = inv.transpose() * &q.form * &inv;
                let c = matrix * nalgebra::DVector::from_column_slice(&q.center);
                Some(Quadric {
                    center: c.as_slice().to_vec(),
                    form,
                })
            }
            Kind::Translate { offset, child } => {
                let q = child.quadric.as_ref()?;
                Some(Quadric {
                    center: q.center.iter().zip(offset).map(|(a, b)| a + b).collect(),
                    form: q.form.clone(),
                })
            }
            Kind::Scale { factor, child } => {
                let q = child.quadric.as_ref()?;
                Some(Quadric {
                    center: q.center.iter().map(|c| c * factor).collect(),
                    form: &q.form / (factor * factor),
                })
            }
            _ => None,
        }
    }

    /// Vertex table when the body is an affine image of a raw polytope.
    pub(crate) fn vertex_table(&self) -> Option<(Vec<f64>, usize)> {
        let d = self.dim;
        match &self.kind {
            Kind::Polytope { vertices, count } => Some((vertices.clone(), *count)),
            Kind::Linear { matrix, child } => {
                let (v, m) = child.vertex_table()?;
                let mut out = vec![0.0; v.len()];
                for (src, dst) in v.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
                    for (i, o) in dst.iter_mut().enumerate() {
                        *o = (0..d).map(|k| matrix[(i, k)] * src[k]).sum();
                    }
                }
                Some((out, m))
            }
            Kind::Translate { offset, child } => {
                let (mut v, m) = child.vertex_table()?;
                for row in v.chunks_exact_mut(d) {
                    row.iter_mut().zip(offset).for_each(|(a, b)| *a += b);
                }
                Some((v, m))
            }
            Kind::Scale { factor, child } => {
                let (mut v, m) = child.vertex_table()?;
                v.iter_mut().for_each(|a| *a *= factor);
                Some((v, m))
            }
            _ => None,
        }
    }
}

pub(crate) fn smoothed_support(
    vertices: &[f64],
    dim: usize,
    s: f64,
    u: &[f64],
    grad: &mut [f64],
) -> (f64, bool) {
    let count = vertices.len() / dim;
    let mut pair = Vec::with_capacity(count);
    let mut top = 0.0f64;
    for v in vertices.chunks_exact(dim) {
        let p = dot(v, u).max(0.0);
        top = top.max(p);
        pair.push(p);
    }
    grad.iter_mut().for_each(|g| *g = 0.0);
    if top <= 0.0 {
        return (0.0, true);
    }
    // Integer sharpness (the common case) takes the much cheaper powi path.
    let int = (s.fract() == 0.0 && s < 1e6).then_some(s as i32);
    let pow = |x: f64, e: f64, ei: Option<i32>| match ei {
        Some(k) => x.powi(k),
        None => x.powf(e),
    };
    let sum: f64 = pair
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| pow(p / top, s, int))
        .sum();
    let h = top * sum.powf(1.0 / s);
    for (p, v) in pair.iter().zip(vertices.chunks_exact(dim)) {
        if *p <= 0.0 {
            continue;
        }
        let w = pow(p / h, s - 1.0, int.map(|k| k - 1));
        if w < 1e-300 {
            continue;
        }
        for (g, vi) in grad.iter_mut().zip(v) {
            *g += w * vi;
        }
    }
    (h, true)
}

/// Origin lies in the interior of `conv(V)` iff the vertices span the space
/// and the origin is a strictly positive convex combination of all of them.
fn origin_strictly_inside(flat: &[f64], count: usize, dim: usize) -> bool {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};

    let m = DMatrix::from_row_slice(count, dim, flat);
    let scale = m.amax().max(1e-300);
    let sv = m.clone().svd(false, false).singular_values;
    if sv.len() < dim || sv.iter().any(|&s| s <= 1e-10 * scale) {
        return false;
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    let lambda: Vec<_> = (0..count).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    for &l in &lambda {
        lp.add_constraint([(l, 1.0), (t, -1.0)], ComparisonOp::Ge, 0.0);
    }
    let ones: Vec<_> = lambda.iter().map(|&l| (l, 1.0)).collect();
    lp.add_constraint(ones, ComparisonOp::Eq, 1.0);
    for k in 0..dim {
        let row: Vec<_> = lambda
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, flat[i * dim + k] / scale))
            .collect();
        lp.add_constraint(&row, ComparisonOp::Eq, 0.0);
    }
    match lp.solve() {
        Ok(sol) => sol[t] > 1e-9 / count as f64,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests;

//! JSON body recipes.
//!
//! ```json
//! {"type": "psum", "p": 2, "terms": [
//!     {"type": "ball", "r": 1, "dim": 4},
//!     {"type": "ellipsoid", "radii": [1, 2]}
//! ]}
//! ```
//!
//! Unary wrappers (`linear`, `translate`, `scale`, `smoothed`) hold their
//! operand under `body`. A ball's `dim` may be omitted inside a composite whose
//! other terms fix the dimension.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Body, Kind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Recipe {
    Ball {
        r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Ellipsoid {
        radii: Vec<f64>,
    },
    GeneralEllipsoid {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
    },
    Polytope {
        vertices: Vec<Vec<f64>>,
    },
    Psum {
        p: f64,
        terms: Vec<Recipe>,
    },
    Minkowski {
        terms: Vec<Recipe>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Linear {
        matrix: Vec<Vec<f64>>,
        body: Box<Recipe>,
    },
    Translate {
        vector: Vec<f64>,
        body: Box<Recipe>,
    },
    Scale {
        factor: f64,
        body: Box<Recipe>,
    },
    Smoothed {
        sharpness: f64,
        body: Box<Recipe>,
    },
}

fn matrix_from_rows(field: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::invalid(field, "expected a square matrix"));
    }
    Ok(DMatrix::from_fn(n, n, |i, k| rows[i][k]))
}

fn rows_from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|k| m[(i, k)]).collect())
        .collect()
}

/// Re-roots a field name under a recipe path, e.g. `terms[1]` + `radii`.
fn locate(err: Error, path: &str) -> Error {
    let join = |field: String| {
        if path.is_empty() {
            field
        } else {
            format!("{path}.{field}")
        }
    };
    match err {
        Error::OddDimension { field, dim } => Error::OddDimension {
            field: join(field),
            dim,
        },
        Error::OriginNotInterior { field } => Error::OriginNotInterior { field: join(field) },
        Error::NotPositiveDefinite { field } => Error::NotPositiveDefinite { field: join(field) },
        Error::InvalidParameter { field, reason } => Error::InvalidParameter {
            field: join(field),
            reason,
        },
        Error::DimensionMismatch { expected, found } => Error::Recipe {
            path: if path.is_empty() {
                "<root>".into()
            } else {
                path.into()
            },
            message: format!("dimension mismatch: expected {expected}, found {found}"),
        },
        other => other,
    }
}

impl Recipe {
    /// Dimension implied by the recipe itself, if any.
    pub fn intrinsic_dim(&self) -> Option<usize> {
        match self {
            Recipe::Ball { dim, .. } => *dim,
            Recipe::Ellipsoid { radii } => Some(2 * radii.len()),
            Recipe::GeneralEllipsoid { q } => Some(q.len()),
            Recipe::Polytope { vertices } => vertices.first().map(Vec::len),
            Recipe::Psum { terms, .. } | Recipe::Minkowski { terms, .. } => {
                terms.iter().find_map(Recipe::intrinsic_dim)
            }
            Recipe::Linear { matrix, .. } => Some(matrix.len()),
            Recipe::Translate { vector, .. } => Some(vector.len()),
            Recipe::Scale { body, .. } | Recipe::Smoothed { body, .. } => body.intrinsic_dim(),
        }
    }

    pub fn build(&self) -> Result<Body> {
        self.build_at("", None)
    }

    fn build_at(&self, path: &str, hint: Option<usize>) -> Result<Body> {
        let dim = self.intrinsic_dim().or(hint);
        let child = |name: &str| {
            if path.is_empty() {
                name.to_string()
            } else {
                format!("{path}.{name}")
            }
        };
        // Report an odd dimension at the term that fixes it, not at a sibling
        // that inherited it.
        if let Recipe::Psum { terms, .. } | Recipe::Minkowski { terms, .. } = self {
            for (i, t) in terms.iter().enumerate() {
                if t.intrinsic_dim().is_some_and(|d| d % 2 == 1) {
                    t.build_at(&child(&format!("terms[{i}]")), None)?;
                }
            }
        }
        let built = match self {
            Recipe::Ball { r, .. } => {
                let Some(d) = dim else {
                    return Err(Error::Recipe {
                        path: child("dim"),
                        message: "ball needs `dim` when no sibling fixes the dimension".into(),
                    });
                };
                Body::ball(d, *r)
            }
            Recipe::Ellipsoid { radii } => Body::ellipsoid(radii),
            Recipe::GeneralEllipsoid { q } => matrix_from_rows("Q", q).and_then(Body::general_ellipsoid),
            Recipe::Polytope { vertices } => Body::polytope(vertices),
            Recipe::Psum { p, terms } => {
                let terms = terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| t.build_at(&child(&format!("terms[{i}]")), dim))
                    .collect::<Result<Vec<_>>>()?;
                Body::psum(*p, terms)
            }
            Recipe::Minkowski { terms, weights } => {
                let terms = terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| t.build_at(&child(&format!("terms[{i}]")), dim))
                    .collect::<Result<Vec<_>>>()?;
                Body::minkowski(terms, weights.clone())
            }
            Recipe::Linear { matrix, body } => {
                let inner = body.build_at(&child("body"), dim)?;
                matrix_from_rows("matrix", matrix).and_then(|m| Body::linear(m, inner))
            }
            Recipe::Translate { vector, body } => {
                let inner = body.build_at(&child("body"), dim)?;
                Body::translate(vector.clone(), inner)
            }
            Recipe::Scale { factor, body } => {
                let inner = body.build_at(&child("body"), dim)?;
                Body::scale(*factor, inner)
            }
            Recipe::Smoothed { sharpness, body } => {
                let inner = body.build_at(&child("body"), dim)?;
                Body::smoothed(*sharpness, inner)
            }
        };
        built.map_err(|e| locate(e, path))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Recipe {
            path: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }
}

impl Body {
    pub fn from_recipe(recipe: &Recipe) -> Result<Self> {
        recipe.build()
    }

    /// Parses and builds a JSON recipe.
    pub fn from_json(text: &str) -> Result<Self> {
        Recipe::from_json(text)?.build()
    }

    /// Recipe that rebuilds this body.
    pub fn to_recipe(&self) -> Recipe {
        match &self.kind {
            Kind::Ball { radius } => Recipe::Ball {
                r: *radius,
                dim: Some(self.dim),
            },
            Kind::Ellipsoid { radii } => Recipe::Ellipsoid { radii: radii.clone() },
            Kind::GeneralEllipsoid { form } => Recipe::GeneralEllipsoid {
                q: rows_from_matrix(form),
            },
            Kind::Polytope { .. } => Recipe::Polytope {
                vertices: self.vertices().expect("polytope"),
            },
            Kind::PSum { p, terms } => Recipe::Psum {
                p: *p,
                terms: terms.iter().map(Body::to_recipe).collect(),
            },
            Kind::Minkowski { weights, terms } => Recipe::Minkowski {
                terms: terms.iter().map(Body::to_recipe).collect(),
                weights: Some(weights.clone()),
            },
            Kind::Linear { matrix, child } => Recipe::Linear {
                matrix: rows_from_matrix(matrix),
                body: Box::new(child.to_recipe()),
            },
            Kind::Translate { offset, child } => Recipe::Translate {
                vector: offset.clone(),
                body: Box::new(child.to_recipe()),
            },
            Kind::Scale { factor, child } => Recipe::Scale {
                factor: *factor,
                body: Box::new(child.to_recipe()),
            },
            Kind::Smoothed { sharpness, child } => Recipe::Smoothed {
                sharpness: *sharpness,
                body: Box::new(child.to_recipe()),
            },
        }
    }
}

//! Ekeland–Hofer–Zehnder capacity of convex bodies in `R^{2n}` via the dual
//! action principle on truncated Fourier loops.
//!
//! Coordinates are interleaved `(x_1, y_1, ..., x_n, y_n)` and
//! `J(x, y) = (-y, x)` on each plane, so the counterclockwise unit circle has
//! action `π`.

// `!(x > 0.0)` style tests reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod loops;
pub mod optim;
pub mod solver;
pub mod suite;
pub mod symplectic;

pub use body::{intersection_support, Body, GaugeEval, IntersectionSupport, Recipe, SupportEval};
pub use error::{Error, Result};
pub use loops::{FourierLoop, GridSamples, LengthMode};
pub use solver::{capacity, CapacityResult, Carrier, CertificateBundle, SolveConfig};
pub use symplectic::SymplecticContext;

//! Numerical checks of the capacity inequalities on concrete bodies.
//!
//! Every check produces [`InequalityReport`]s with the sign convention
//! `pass ⇔ deficit >= -slack`.

mod bm;
mod derivative;
mod intersect;
mod width;

pub use bm::{bm_check, equality_certificate, p_sum};
pub use derivative::{directional_derivative, isoperimetric_check, DEFAULT_EPS_SCHEDULE};
pub use intersect::{
    build_intersection_surrogate, intersection_concavity_check, planar_area, IntersectionSurrogate,
    SurrogateConfig,
};
pub use width::{mean_width, mean_width_bound_check, MeanWidthEstimate};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Relative slack for inequalities between solver outputs.
pub const SOLVER_SLACK: f64 = 1e-3;
/// Relative slack for inequalities between analytic quantities.
pub const ANALYTIC_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    pub slack: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub witnesses: Map<String, Value>,
}

impl InequalityReport {
    /// Report for `lhs <= rhs`; the deficit is `rhs - lhs`.
    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        Self::new(name, lhs, rhs, rhs - lhs, slack)
    }

    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, deficit: f64, slack: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            deficit,
            slack,
            pass: deficit >= -slack,
            witnesses: Map::new(),
        }
    }

    pub fn witness(mut self, key: &str, value: impl Serialize) -> Self {
        self.witnesses.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
        self
    }
}

pub fn all_pass(reports: &[InequalityReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

/// One CSV row per report: `name,lhs,rhs,deficit,slack,pass`.
pub fn reports_to_csv(reports: &[InequalityReport]) -> String {
    let mut out = String::from("name,lhs,rhs,deficit,slack,pass\n");
    for r in reports {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{}",
            r.name, r.lhs, r.rhs, r.deficit, r.slack, r.pass
        )
        .unwrap();
    }
    out
}

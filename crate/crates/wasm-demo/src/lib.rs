//! Browser bindings: every entry point takes JSON recipes as strings and
//! returns a JSON string, so the page needs no glue beyond `JSON.parse`.

use ehz_core::harness::{bm_check, intersection_concavity_check, SurrogateConfig, SOLVER_SLACK};
use ehz_core::{capacity, Body, SolveConfig};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Samples per plane in the carrier and boundary polylines.
const POLYLINE_POINTS: usize = 200;

fn config(modes: usize, p: f64) -> Result<SolveConfig, String> {
    let cfg = SolveConfig {
        modes,
        p,
        starts: 4,
        ..SolveConfig::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn body(text: &str, what: &str) -> Result<Body, String> {
    Body::from_json(text).map_err(|e| format!("{what}: {e}"))
}

/// Boundary of a planar body traced by the support gradients.
fn planar_boundary(b: &Body) -> Result<Vec<[f64; 2]>, String> {
    (0..POLYLINE_POINTS)
        .map(|i| {
            let th = std::f64::consts::TAU * i as f64 / POLYLINE_POINTS as f64;
            let g = b
                .support(&[th.cos(), th.sin()])
                .map_err(|e| e.to_string())?
                .gradient;
            Ok([g[0], g[1]])
        })
        .collect()
}

/// Capacity of one body, its carrier projected to each symplectic plane and,
/// for planar bodies, the boundary.
pub fn capacity_report(recipe: &str, modes: usize) -> Result<String, String> {
    let b = body(recipe, "body")?;
    let r = capacity(&b, &config(modes, 2.0)?).map_err(|e| e.to_string())?;
    let pos = r.carrier.positions(POLYLINE_POINTS).map_err(|e| e.to_string())?;
    let d = b.dim();
    let planes: Vec<Vec<[f64; 2]>> = (0..d / 2)
        .map(|j| pos.chunks_exact(d).map(|z| [z[2 * j], z[2 * j + 1]]).collect())
        .collect();
    let boundary = if d == 2 { Some(planar_boundary(&b)?) } else { None };
    Ok(json!({
        "capacity": r.capacity,
        "converged": r.converged,
        "action": r.carrier.action(),
        "certificates": r.certificates,
        "planes": planes,
        "boundary": boundary,
    })
    .to_string())
}

/// `c(K)^{p/2} + c(T)^{p/2} <= c(K +_p T)^{p/2}`, with `p = 1` the Minkowski sum.
pub fn bm_report(k: &str, t: &str, p: f64, modes: usize) -> Result<String, String> {
    let (k, t) = (body(k, "K")?, body(t, "T")?);
    let cfg = config(modes, if p > 1.0 { p } else { 2.0 })?;
    let r = bm_check(&k, &t, p, &cfg, SOLVER_SLACK).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&r).expect("serializable"))
}

/// Midpoint concavity of `x ↦ c(K ∩ (x + T))^{1/2}` between two shifts.
pub fn intersection_report(
    k: &str,
    t: &str,
    x: &[f64],
    y: &[f64],
    lam: f64,
    modes: usize,
) -> Result<String, String> {
    let (k, t) = (body(k, "K")?, body(t, "T")?);
    let reports = intersection_concavity_check(
        &k,
        &t,
        x,
        y,
        lam,
        &config(modes, 2.0)?,
        &SurrogateConfig::default(),
        SOLVER_SLACK,
    )
    .map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&reports).expect("serializable"))
}

#[wasm_bindgen(js_name = capacity)]
pub fn capacity_js(recipe: &str, modes: usize) -> Result<String, JsError> {
    capacity_report(recipe, modes).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = brunnMinkowski)]
pub fn bm_js(k: &str, t: &str, p: f64, modes: usize) -> Result<String, JsError> {
    bm_report(k, t, p, modes).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = intersection)]
pub fn intersection_js(
    k: &str,
    t: &str,
    x: Vec<f64>,
    y: Vec<f64>,
    lam: f64,
    modes: usize,
) -> Result<String, JsError> {
    intersection_report(k, t, &x, &y, lam, modes).map_err(|e| JsError::new(&e))
}

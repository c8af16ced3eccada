use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ehz_core::harness::{
    self, all_pass, bm_check, directional_derivative, equality_certificate, intersection_concavity_check,
    isoperimetric_check, mean_width_bound_check, InequalityReport, SurrogateConfig, SOLVER_SLACK,
};
use ehz_core::suite::{run_criterion, summary_table, CRITERIA};
use ehz_core::{Body, CapacityResult, Recipe, SolveConfig};
use serde_json::{json, Value};

use crate::output::{csv_with_config, emit, sha256_hex, Artifact};
use crate::{Command, Common, Format};

/// Residual below which homothetic carriers are accepted.
const HOMOTHETY_TOL: f64 = 1e-6;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable input file.
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Malformed or invalid recipe.
    Input {
        path: PathBuf,
        source: ehz_core::Error,
    },
    /// Inconsistent flags or inputs.
    Usage(String),
    /// Solver or harness failure.
    Solve(ehz_core::Error),
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Input { .. } | CliError::Usage(_) => 2,
            CliError::Solve(_) | CliError::Write { .. } => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Read { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Input { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Usage(m) => f.write_str(m),
            CliError::Solve(e) => write!(f, "{e}"),
            CliError::Write { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl From<ehz_core::Error> for CliError {
    fn from(e: ehz_core::Error) -> Self {
        CliError::Solve(e)
    }
}

struct Input {
    path: PathBuf,
    recipe: Recipe,
    body: Body,
}

fn load(path: &Path) -> Result<Input, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let input = |source| CliError::Input {
        path: path.to_path_buf(),
        source,
    };
    let recipe = Recipe::from_json(&text).map_err(input)?;
    let body = recipe.build().map_err(input)?;
    Ok(Input {
        path: path.to_path_buf(),
        recipe,
        body,
    })
}

fn load_pair(k: &Path, t: &Path) -> Result<(Input, Input), CliError> {
    let (a, b) = (load(k)?, load(t)?);
    if a.body.dim() != b.body.dim() {
        return Err(CliError::Input {
            path: b.path.clone(),
            source: ehz_core::Error::Recipe {
                path: "<root>".into(),
                message: format!(
                    "dimension {} does not match {} ({})",
                    b.body.dim(),
                    a.path.display(),
                    a.body.dim()
                ),
            },
        });
    }
    Ok((a, b))
}

fn solve_config(common: &Common, p: f64) -> Result<SolveConfig, CliError> {
    let cfg = SolveConfig {
        p,
        modes: common.modes,
        starts: common.starts,
        seed: common.seed,
        grad_tol: common.tol,
        ..SolveConfig::default()
    };
    cfg.validate()
        .map_err(|e| CliError::Usage(format!("invalid flags: {e}")))?;
    Ok(cfg)
}

/// Resolved configuration echoed into every artifact.
struct Run {
    command: &'static str,
    config: Value,
    hash: String,
}

impl Run {
    fn new(
        command: &'static str,
        common: &Common,
        solver: &SolveConfig,
        extra: Value,
        inputs: &[&Input],
    ) -> Self {
        let config = json!({
            "command": command,
            "p": common.p,
            "modes": common.modes,
            "starts": common.starts,
            "seed": common.seed,
            "tol": common.tol,
            "samples": common.samples,
            "format": common.format(),
            "solver": solver,
            "options": extra,
            "inputs": inputs.iter().map(|i| json!({
                "path": i.path.display().to_string(),
                "recipe": i.recipe,
            })).collect::<Vec<_>>(),
        });
        let hash = sha256_hex(&config);
        Self {
            command,
            config,
            hash,
        }
    }

    fn document(&self, key: &str, payload: Value, pass: bool) -> Value {
        json!({
            "command": self.command,
            "config": self.config,
            "config_hash": self.hash,
            key: payload,
            "pass": pass,
        })
    }

    fn emit_reports(
        &self,
        common: &Common,
        reports: &[InequalityReport],
        elapsed: f64,
    ) -> Result<bool, CliError> {
        let pass = all_pass(reports);
        let artifact = match common.format() {
            Format::Json => Artifact::Json(self.document("reports", json!(reports), pass)),
            Format::Csv => Artifact::Csv(csv_with_config(&self.config, &harness::reports_to_csv(reports))),
        };
        emit(
            common.out.as_deref(),
            artifact,
            &self.hash,
            json!({"elapsed_seconds": elapsed, "seed": common.seed}),
        )?;
        Ok(pass)
    }
}

fn cached_capacity(
    body: &Input,
    cfg: &SolveConfig,
    cache: Option<&Path>,
) -> Result<CapacityResult, CliError> {
    let Some(dir) = cache else {
        return Ok(ehz_core::capacity(&body.body, cfg)?);
    };
    let key = sha256_hex(&json!({"recipe": body.recipe, "solver": cfg}));
    let file = dir.join(format!("{key}.json"));
    if let Ok(text) = std::fs::read_to_string(&file) {
        if let Ok(hit) = serde_json::from_str::<CapacityResult>(&text) {
            return Ok(hit);
        }
    }
    let result = ehz_core::capacity(&body.body, cfg)?;
    let write_err = |source| CliError::Write {
        path: file.clone(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(write_err)?;
    std::fs::write(&file, serde_json::to_string(&result).expect("serializable")).map_err(write_err)?;
    Ok(result)
}

fn check_shift(name: &str, v: &[f64], dim: usize) -> Result<(), CliError> {
    if v.len() != dim {
        return Err(CliError::Usage(format!(
            "--{name} has {} entries, the bodies live in dimension {dim}",
            v.len()
        )));
    }
    Ok(())
}

/// Runs one command; `Ok(false)` means a failed inequality or an
/// unconverged solve.
pub fn run(command: Command) -> Result<bool, CliError> {
    let start = Instant::now();
    match command {
        Command::Capacity {
            body,
            stability,
            common,
        } => {
            let input = load(&body)?;
            let mut cfg = solve_config(&common, common.p)?;
            cfg.stability_check = stability;
            let run = Run::new(
                "capacity",
                &common,
                &cfg,
                json!({"stability": stability}),
                &[&input],
            );
            let r = cached_capacity(&input, &cfg, common.cache.as_deref())?;
            let artifact = match common.format() {
                Format::Json => Artifact::Json(run.document("result", json!(r), r.converged)),
                Format::Csv => {
                    let drift = r
                        .stability
                        .as_ref()
                        .map(|s| format!("{:?}", s.rel_drift))
                        .unwrap_or_default();
                    Artifact::Csv(csv_with_config(
                        &run.config,
                        &format!(
                            "capacity,lambda,p,modes,nodes,converged,best_start,stability_drift\n{:?},{:?},{:?},{},{},{},{},{}\n",
                            r.capacity, r.lambda, r.p, r.modes, r.nodes, r.converged, r.best_start, drift
                        ),
                    ))
                }
            };
            emit(
                common.out.as_deref(),
                artifact,
                &run.hash,
                json!({"elapsed_seconds": start.elapsed().as_secs_f64(), "seed": common.seed}),
            )?;
            Ok(r.converged)
        }
        Command::Carrier { body, points, common } => {
            let input = load(&body)?;
            let cfg = solve_config(&common, common.p)?;
            let run = Run::new("carrier", &common, &cfg, json!({"points": points}), &[&input]);
            let r = cached_capacity(&input, &cfg, common.cache.as_deref())?;
            let artifact = match common.format() {
                Format::Csv => Artifact::Csv(csv_with_config(&run.config, &r.carrier.to_csv(points, true)?)),
                Format::Json => Artifact::Json(run.document(
                    "carrier",
                    json!({"capacity": r.capacity, "carrier": r.carrier}),
                    r.converged,
                )),
            };
            emit(
                common.out.as_deref(),
                artifact,
                &run.hash,
                json!({"elapsed_seconds": start.elapsed().as_secs_f64(), "seed": common.seed}),
            )?;
            Ok(r.converged)
        }
        Command::Bm {
            k,
            t,
            homothety,
            common,
        } => {
            let (a, b) = load_pair(&k, &t)?;
            if common.p < 1.0 {
                return Err(CliError::Usage("--p must be at least 1 for bm".into()));
            }
            // The sum exponent may be 1; the solver exponent must exceed it.
            let cfg = solve_config(&common, if common.p > 1.0 { common.p } else { 2.0 })?;
            let run = Run::new("bm", &common, &cfg, json!({"homothety": homothety}), &[&a, &b]);
            let mut reports = vec![bm_check(&a.body, &b.body, common.p, &cfg, SOLVER_SLACK)?];
            if homothety {
                reports.push(equality_certificate(
                    &a.body,
                    &b.body,
                    common.p,
                    &cfg,
                    HOMOTHETY_TOL,
                )?);
            }
            run.emit_reports(&common, &reports, start.elapsed().as_secs_f64())
        }
        Command::Isoperimetric { k, t, common } => {
            let (a, b) = load_pair(&k, &t)?;
            let cfg = solve_config(&common, common.p)?;
            let run = Run::new("isoperimetric", &common, &cfg, Value::Null, &[&a, &b]);
            let reports = isoperimetric_check(&a.body, &b.body, &cfg, SOLVER_SLACK)?;
            run.emit_reports(&common, &reports, start.elapsed().as_secs_f64())
        }
        Command::Meanwidth { body, common } => {
            let input = load(&body)?;
            let cfg = solve_config(&common, common.p)?;
            let run = Run::new("meanwidth", &common, &cfg, Value::Null, &[&input]);
            let report =
                mean_width_bound_check(&input.body, &cfg, common.samples, common.seed, SOLVER_SLACK)?;
            run.emit_reports(&common, &[report], start.elapsed().as_secs_f64())
        }
        Command::Intersect {
            k,
            t,
            x,
            y,
            lam,
            common,
        } => {
            let (a, b) = load_pair(&k, &t)?;
            check_shift("x", &x, a.body.dim())?;
            check_shift("y", &y, a.body.dim())?;
            if !(0.0..=1.0).contains(&lam) {
                return Err(CliError::Usage("--lam must lie in [0, 1]".into()));
            }
            let cfg = solve_config(&common, common.p)?;
            let scfg = SurrogateConfig {
                seed: common.seed,
                ..SurrogateConfig::default()
            };
            let run = Run::new(
                "intersect",
                &common,
                &cfg,
                json!({"x": x, "y": y, "lam": lam, "surrogate": scfg}),
                &[&a, &b],
            );
            let reports =
                intersection_concavity_check(&a.body, &b.body, &x, &y, lam, &cfg, &scfg, SOLVER_SLACK)?;
            run.emit_reports(&common, &reports, start.elapsed().as_secs_f64())
        }
        Command::Derivative { k, t, eps, common } => {
            let (a, b) = load_pair(&k, &t)?;
            if eps.len() < 2 || eps.iter().any(|&e| !(e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
                return Err(CliError::Usage(
                    "--eps needs at least two positive, strictly decreasing steps".into(),
                ));
            }
            let cfg = solve_config(&common, common.p)?;
            let run = Run::new("derivative", &common, &cfg, json!({"eps": eps}), &[&a, &b]);
            let reports = directional_derivative(&a.body, &b.body, &cfg, &eps, SOLVER_SLACK)?;
            run.emit_reports(&common, &reports, start.elapsed().as_secs_f64())
        }
        Command::Suite { only, common } => suite(only, &common, start),
    }
}

fn suite(only: Vec<u8>, common: &Common, start: Instant) -> Result<bool, CliError> {
    let ids: Vec<u8> = if only.is_empty() {
        CRITERIA.iter().map(|(id, _)| *id).collect()
    } else {
        only
    };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|(c, _)| c == *id)) {
        return Err(CliError::Usage(format!(
            "no criterion {bad}; ids run 1 to {}",
            CRITERIA.len()
        )));
    }
    let mut outcomes = Vec::with_capacity(ids.len());
    for id in ids {
        let o = run_criterion(id);
        eprintln!("{}", o.line());
        outcomes.push(o);
    }
    let pass = outcomes.iter().all(|o| o.pass);
    let table = summary_table(&outcomes);
    if common.out.is_none() {
        print!("{table}");
        return Ok(pass);
    }
    eprint!("{table}");

    let config = json!({"command": "suite", "criteria": outcomes.iter().map(|o| o.id).collect::<Vec<_>>()});
    let hash = sha256_hex(&config);
    // Timings differ between runs; they go to the sidecar.
    let timings: Vec<Value> = outcomes
        .iter()
        .map(|o| json!({"id": o.id, "seconds": o.seconds}))
        .collect();
    let artifact = match common.format() {
        Format::Json => {
            let rows: Vec<Value> = outcomes
                .iter()
                .map(|o| json!({"id": o.id, "title": o.title, "pass": o.pass, "summary": o.summary, "details": o.details}))
                .collect();
            Artifact::Json(
                json!({"command": "suite", "config": config, "config_hash": hash, "criteria": rows, "pass": pass}),
            )
        }
        Format::Csv => {
            let mut s = String::from("id,title,pass,summary\n");
            for o in &outcomes {
                s.push_str(&format!(
                    "{},\"{}\",{},\"{}\"\n",
                    o.id,
                    o.title,
                    o.pass,
                    o.summary.replace('"', "'")
                ));
            }
            Artifact::Csv(csv_with_config(&config, &s))
        }
    };
    emit(
        common.out.as_deref(),
        artifact,
        &hash,
        json!({"elapsed_seconds": start.elapsed().as_secs_f64(), "timings": timings}),
    )?;
    Ok(pass)
}

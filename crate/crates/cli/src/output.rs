use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::commands::CliError;

pub fn sha256_hex(value: &Value) -> String {
    let digest = Sha256::digest(value.to_string().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

/// What a command produces: a JSON document or CSV text.
pub enum Artifact {
    Json(Value),
    Csv(String),
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes the artifact to `out` (stdout when `None`). With a file target the
/// sidecar `<out>.meta.json` receives the timestamp and `extra`, so the
/// artifact itself stays byte-identical across runs.
pub fn emit(out: Option<&Path>, artifact: Artifact, config_hash: &str, extra: Value) -> Result<(), CliError> {
    let text = match artifact {
        Artifact::Json(v) => serde_json::to_string_pretty(&v).expect("serializable") + "\n",
        Artifact::Csv(s) => s,
    };
    let Some(path) = out else {
        print!("{text}");
        return Ok(());
    };
    let write = |p: &Path, body: &str| {
        std::fs::write(p, body).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        })
    };
    write(path, &text)?;
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let meta = json!({
        "artifact": path.display().to_string(),
        "config_hash": config_hash,
        "timestamp_unix": now,
        "version": env!("CARGO_PKG_VERSION"),
        "run": extra,
    });
    write(
        &sidecar_path(path),
        &(serde_json::to_string_pretty(&meta).expect("serializable") + "\n"),
    )
}

/// CSV with the resolved configuration echoed as a leading comment line.
pub fn csv_with_config(config: &Value, body: &str) -> String {
    format!("# config {config}\n{body}")
}

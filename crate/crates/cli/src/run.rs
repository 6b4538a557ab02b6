//! Run directories, manifests and atomic file output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub item: String,
    pub error: String,
}

/// Everything a command produces; the caller stamps and writes it.
#[derive(Debug, Default)]
pub struct Outcome {
    /// `(file name, contents)`, `results.csv` first.
    pub files: Vec<(String, String)>,
    pub failures: Vec<Failure>,
    pub notes: Vec<String>,
    pub seeds: Vec<u64>,
    pub spectrum_hash: Option<String>,
    pub summary: Option<Value>,
}

impl Outcome {
    pub fn fail(&mut self, item: impl Into<String>, error: impl ToString) {
        self.failures.push(Failure { item: item.into(), error: error.to_string() });
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

pub struct RunContext {
    pub command: String,
    /// Counterexample family, otherwise `None`.
    pub variant: Option<String>,
    pub config: Value,
    pub threads: Option<usize>,
    pub started: chrono::DateTime<chrono::Utc>,
    pub clock: Instant,
}

/// Writes the outputs, then the manifest that lists them with their digests.
pub fn write_run(out_root: &Path, ctx: &RunContext, outcome: &Outcome) -> Result<PathBuf> {
    let canonical = serde_json::to_string(&ctx.config)?;
    let id = sha256_hex(format!("{}\n{:?}\n{canonical}", ctx.command, ctx.variant).as_bytes());
    let stamp = ctx.started.format("%Y%m%dT%H%M%S%.3fZ");
    let base = out_root.join(&ctx.command);
    let mut dir = base.join(format!("{stamp}-{}", &id[..12]));
    let mut k = 1;
    while dir.exists() {
        dir = base.join(format!("{stamp}-{}-{k}", &id[..12]));
        k += 1;
    }
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut outputs = Vec::new();
    for (name, body) in &outcome.files {
        write_atomic(&dir.join(name), body.as_bytes())?;
        outputs.push(json!({ "file": name, "sha256": sha256_hex(body.as_bytes()) }));
    }
    let manifest = json!({
        "manifest_version": MANIFEST_VERSION,
        "command": ctx.command,
        "variant": ctx.variant,
        "config": ctx.config,
        "config_hash": id,
        "spectrum_hash": outcome.spectrum_hash,
        "seeds": outcome.seeds,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "started_utc": ctx.started.to_rfc3339(),
        "wall_time_s": ctx.clock.elapsed().as_secs_f64(),
        "threads": ctx.threads,
        "status": if outcome.failures.is_empty() { "ok" } else { "partial_failure" },
        "failures": outcome.failures,
        "notes": outcome.notes,
        "outputs": outputs,
        "summary": outcome.summary,
    });
    write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(dir)
}

/// CSV text from a header and rows of preformatted cells.
pub fn csv(header: &str, rows: &[Vec<String>]) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn cell<T: std::fmt::Display>(v: T) -> String {
    v.to_string()
}

pub fn opt_cell<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

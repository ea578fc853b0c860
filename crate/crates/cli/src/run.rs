//! Running an experiment into an output directory.
//!
//! Files are written to a hidden staging directory next to the target and
//! renamed into place once everything succeeded, so an interrupted or failed
//! run leaves nothing at the target path.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, ExperimentConfig};
use crate::experiments::{execute, Outputs};

pub const MANIFEST: &str = "manifest.json";
pub const MANIFEST_SCHEMA: &str = "cutlab.manifest.v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Written as `manifest.json` beside the data files it describes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub workers: usize,
    pub wall_time_s: f64,
    pub rows: BTreeMap<String, u64>,
    pub files: Vec<FileDigest>,
}

impl RunManifest {
    /// Recompute every digest from the files in `dir`; returns the names that
    /// do not match.
    pub fn verify(&self, dir: &Path) -> std::io::Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.files {
            let data = fs::read(dir.join(&f.name))?;
            if data.len() as u64 != f.bytes || sha256_hex(&data) != f.sha256 {
                bad.push(f.name.clone());
            }
        }
        Ok(bad)
    }

    pub fn digests(&self) -> Vec<(&str, &str)> {
        self.files.iter().map(|f| (f.name.as_str(), f.sha256.as_str())).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Simulation(#[from] cutlab_core::Error),
    #[error("output {0} already exists")]
    OutputExists(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// 2 for configuration problems, 3 for everything that stops a valid run.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// Removes the staging directory unless disarmed.
struct Staging {
    path: PathBuf,
    armed: bool,
}

impl Drop for Staging {
    fn drop(&mut self) {
        if self.armed {
            let _ = fs::remove_dir_all(&self.path);
        }
    }
}

fn staging_path(out: &Path) -> PathBuf {
    let name = out.file_name().map_or_else(|| "run".into(), |n| n.to_string_lossy().into_owned());
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    parent.join(format!(".{name}.partial-{}", std::process::id()))
}

fn manifest(cfg: &ExperimentConfig, outputs: &Outputs, wall: f64) -> RunManifest {
    RunManifest {
        schema: MANIFEST_SCHEMA.into(),
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: cfg.kind.name().into(),
        config: serde_json::to_value(cfg).expect("serializable"),
        seed: cfg.seed,
        workers: cfg.workers,
        wall_time_s: wall,
        rows: outputs.rows.clone(),
        files: outputs
            .files
            .iter()
            .map(|f| FileDigest {
                name: f.name.clone(),
                bytes: f.bytes.len() as u64,
                sha256: sha256_hex(&f.bytes),
            })
            .collect(),
    }
}

/// Run `cfg` and write its outputs and manifest to `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest, RunError> {
    run_experiment_with_cancel(cfg, None)
}

/// As [`run_experiment`]; setting `cancel` aborts the run and removes
/// everything written so far.
pub fn run_experiment_with_cancel(cfg: &ExperimentConfig, cancel: Option<Arc<AtomicBool>>) -> Result<RunManifest, RunError> {
    let out = cfg.out.as_path();
    if out.exists() {
        return Err(RunError::OutputExists(out.to_path_buf()));
    }
    let stage = Staging {
        path: staging_path(out),
        armed: true,
    };
    if stage.path.exists() {
        fs::remove_dir_all(&stage.path).map_err(io(&stage.path))?;
    }
    fs::create_dir_all(&stage.path).map_err(io(&stage.path))?;

    let mut runner = cutlab_core::TrialRunner::new(cfg.workers)?;
    if let Some(flag) = cancel {
        runner = runner.with_cancel(flag);
    }
    let start = Instant::now();
    let outputs = execute(cfg, &runner)?;
    let wall = start.elapsed().as_secs_f64();

    for f in &outputs.files {
        let p = stage.path.join(&f.name);
        fs::write(&p, &f.bytes).map_err(io(&p))?;
    }
    let m = manifest(cfg, &outputs, wall);
    let mp = stage.path.join(MANIFEST);
    let mut text = serde_json::to_vec_pretty(&m).expect("serializable");
    text.push(b'\n');
    fs::write(&mp, text).map_err(io(&mp))?;

    if out.exists() {
        return Err(RunError::OutputExists(out.to_path_buf()));
    }
    fs::rename(&stage.path, out).map_err(io(out))?;
    let mut stage = stage;
    stage.armed = false;
    Ok(m)
}

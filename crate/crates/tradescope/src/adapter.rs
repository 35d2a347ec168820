//! File-based protocol for external super-resolution processes.
//!
//! For every call the harness creates a private workspace holding
//! `input.png` (16-bit) and `job.json`, then runs `program [args..] job.json`.
//! The adapter writes `output.png` and `status.json` and exits 0. The
//! workspace is removed when the call returns, whatever the outcome.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tradescope_core::raster::BitDepth;
use tradescope_core::Raster;

use crate::backend::{BackendError, ExternalBackend};
use crate::io::{load_raster, save_raster};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterJob {
    pub input_path: PathBuf,
    pub output_path: PathBuf,
    pub status_path: PathBuf,
    pub scale: u32,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterStatus {
    pub ok: bool,
    #[serde(default)]
    pub message: String,
    pub wall_time: f64,
}

impl AdapterJob {
    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

impl AdapterStatus {
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self).expect("status serializes"))
    }
}

fn workspace_err(e: impl std::fmt::Display) -> BackendError {
    BackendError::Workspace(e.to_string())
}

fn read_status(path: &Path) -> Result<AdapterStatus, BackendError> {
    let text = fs::read_to_string(path).map_err(|e| BackendError::MalformedStatus(format!("{e}")))?;
    serde_json::from_str(&text).map_err(|e| BackendError::MalformedStatus(e.to_string()))
}

/// Runs one job through `adapter` and returns its output image.
pub fn run_job(adapter: &ExternalBackend, input: &Raster, scale: u32) -> Result<Raster, BackendError> {
    let mut builder = tempfile::Builder::new();
    builder.prefix("tradescope-job-");
    let ws = match &adapter.workspace_root {
        Some(root) => builder.tempdir_in(root),
        None => builder.tempdir(),
    }
    .map_err(workspace_err)?;

    let job = AdapterJob {
        input_path: ws.path().join("input.png"),
        output_path: ws.path().join("output.png"),
        status_path: ws.path().join("status.json"),
        scale,
        params: adapter.params.clone(),
    };
    save_raster(input, &job.input_path, BitDepth::Sixteen).map_err(workspace_err)?;
    let job_path = ws.path().join("job.json");
    fs::write(&job_path, serde_json::to_vec_pretty(&job).expect("job serializes")).map_err(workspace_err)?;
    let stderr_path = ws.path().join("stderr.log");
    let stderr = File::create(&stderr_path).map_err(workspace_err)?;

    let mut child = Command::new(&adapter.program)
        .args(&adapter.args)
        .arg(&job_path)
        .current_dir(ws.path())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(stderr)
        .spawn()
        .map_err(|source| BackendError::Spawn {
            program: adapter.program.clone(),
            source,
        })?;

    let start = Instant::now();
    let mut pause = Duration::from_millis(1);
    let exit = loop {
        if let Some(status) = child.try_wait().map_err(workspace_err)? {
            break status;
        }
        if start.elapsed() >= adapter.timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(BackendError::Timeout(adapter.timeout));
        }
        thread::sleep(pause);
        pause = (pause * 2).min(Duration::from_millis(20));
    };

    if !exit.success() {
        let message = match read_status(&job.status_path) {
            Ok(s) if !s.message.is_empty() => s.message,
            _ => fs::read_to_string(&stderr_path).unwrap_or_default().trim().to_owned(),
        };
        return Err(BackendError::NonZeroExit {
            code: exit.code(),
            message,
        });
    }
    let status = read_status(&job.status_path)?;
    if !status.ok {
        return Err(BackendError::AdapterFailed(status.message));
    }
    let output = load_raster(&job.output_path).map_err(workspace_err)?;
    let s = scale as usize;
    let expected = (input.width() * s, input.height() * s, input.channels());
    let got = (output.width(), output.height(), output.channels());
    if got != expected {
        return Err(BackendError::DimsViolation { expected, got });
    }
    Ok(output.with_gsd(input.gsd() / f64::from(scale))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_json_round_trip() {
        let mut params = serde_json::Map::new();
        params.insert("mode".into(), "bicubic-echo".into());
        let job = AdapterJob {
            input_path: "in.png".into(),
            output_path: "out.png".into(),
            status_path: "status.json".into(),
            scale: 3,
            params,
        };
        let text = serde_json::to_string(&job).unwrap();
        assert_eq!(serde_json::from_str::<AdapterJob>(&text).unwrap(), job);
    }

    #[test]
    fn missing_program_fails_on_first_call() {
        let backend = ExternalBackend::new("/nonexistent/adapter");
        let img = Raster::filled(2, 2, 1, 0.5, 1.0).unwrap();
        assert!(matches!(run_job(&backend, &img, 2), Err(BackendError::Spawn { .. })));
    }
}

//! Reference adapter: bicubic upscaling over the file protocol.
//!
//! Test hooks in the job's `params`:
//! `fault` = `bad_dims` | `exit_nonzero` | `no_status` | `bad_status` | `report_failure`,
//! and `sleep_ms` to stall before answering.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use tradescope::adapter::{AdapterJob, AdapterStatus};
use tradescope::core::raster::BitDepth;
use tradescope::core::resample::{self, Kernel};
use tradescope::io::{load_raster, save_raster};

fn serve(job: &AdapterJob) -> Result<(), String> {
    let input = load_raster(&job.input_path).map_err(|e| e.to_string())?;
    let fault = job.params.get("fault").and_then(|v| v.as_str()).unwrap_or("");
    let scale = job.scale as usize + usize::from(fault == "bad_dims");
    let out = resample::upscale(&input, scale, Kernel::Bicubic).map_err(|e| e.to_string())?;
    save_raster(&out.clamp_unit(), &job.output_path, BitDepth::Sixteen).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let start = Instant::now();
    let Some(path) = std::env::args_os().nth(1).map(PathBuf::from) else {
        eprintln!("usage: bicubic-echo-adapter JOB.json");
        return ExitCode::from(2);
    };
    let job = match AdapterJob::read(&path) {
        Ok(job) => job,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(ms) = job.params.get("sleep_ms").and_then(|v| v.as_u64()) {
        std::thread::sleep(Duration::from_millis(ms));
    }
    let fault = job
        .params
        .get("fault")
        .and_then(|v| v.as_str())
        .unwrap_or("")
        .to_owned();
    let result = serve(&job);
    let status = AdapterStatus {
        ok: result.is_ok() && fault != "report_failure",
        message: match (&result, fault.as_str()) {
            (Err(e), _) => e.clone(),
            (Ok(()), "report_failure") => "model refused the input".into(),
            (Ok(()), "exit_nonzero") => "injected failure".into(),
            _ => String::new(),
        },
        wall_time: start.elapsed().as_secs_f64(),
    };
    match fault.as_str() {
        "no_status" => {}
        "bad_status" => {
            let _ = std::fs::write(&job.status_path, b"{ not json");
        }
        _ => {
            if let Err(e) = status.write(&job.status_path) {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
        }
    }
    if result.is_err() || fault == "exit_nonzero" {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

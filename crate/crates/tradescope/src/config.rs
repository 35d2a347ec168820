//! TOML configuration mirroring the command-line flags.
//!
//! ```toml
//! [optics]
//! wavelength = 560e-9
//!
//! [degrade]
//! grd = 1.9
//! snr50 = 50
//!
//! [backend]
//! id = "bicubic"
//!
//! [sweep]
//! snr50 = [10, 50, 100]
//! jobs = 4
//! ```
//!
//! Relative paths resolve against the file's directory. Flags win over the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsSection {
    pub wavelength: Option<f64>,
    pub altitude: Option<f64>,
    pub obscuration: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradeSection {
    pub gsd_original: Option<f64>,
    pub gsd_product: Option<f64>,
    pub gsd_sensor: Option<f64>,
    pub grd: Option<f64>,
    pub snr50: Option<f64>,
    pub seed: Option<u64>,
    pub bit: Option<u32>,
    pub resample_down: Option<String>,
    pub resample_up: Option<String>,
    pub save_bit: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    pub id: Option<String>,
    pub weights: Option<Vec<PathBuf>>,
    pub n_blocks: Option<usize>,
    pub n_feats: Option<usize>,
    pub residual_scaling: Option<f32>,
    pub edsr_seed: Option<u64>,
    pub adapter: Option<PathBuf>,
    pub adapter_args: Option<Vec<String>>,
    pub timeout_secs: Option<f64>,
    pub params: Option<toml::Table>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub gsd: Option<Vec<f64>>,
    pub grd: Option<Vec<f64>>,
    pub snr50: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub manifest: Option<PathBuf>,
    pub corpus_seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub optics: OpticsSection,
    #[serde(default)]
    pub degrade: DegradeSection,
    #[serde(default)]
    pub backend: BackendSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.backend.weights.iter_mut().flatten().for_each(fix);
        cfg.backend.adapter.iter_mut().for_each(fix);
        cfg.sweep.manifest.iter_mut().for_each(fix);
        cfg.sweep.out_dir.iter_mut().for_each(fix);
        Ok(cfg)
    }
}

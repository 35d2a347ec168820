//! Dataset manifests: one `[[crop]]` table per image.
//!
//! ```toml
//! root = "crops"          # optional, relative to the manifest
//!
//! [[crop]]
//! path = "beach_1.png"
//! geography = "beach"
//! crop_id = 1
//! gsd_m = 0.6
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tradescope_core::raster::{BitDepth, Geography, LabeledCrop};
use tradescope_core::synth;

use crate::error::{AppError, Result};
use crate::io::{load_raster, save_raster};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub geography: String,
    pub crop_id: u32,
    pub gsd_m: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root: Option<PathBuf>,
    #[serde(default, rename = "crop")]
    crops: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    /// Directory entry paths are resolved against.
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Parses and validates `path`: known geographies, positive ids and GSDs,
    /// unique paths, and every file present.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let file: ManifestFile = toml::from_str(&text).map_err(|e| AppError::format(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let root = match file.root {
            Some(r) if r.is_absolute() => r,
            Some(r) => base.join(r),
            None => base.to_path_buf(),
        };
        let manifest = DatasetManifest {
            root,
            entries: file.crops,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(AppError::Validation("manifest lists no crops".into()));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            e.geography
                .parse::<Geography>()
                .map_err(|err| AppError::Validation(format!("{}: {err}", e.path.display())))?;
            if e.crop_id == 0 {
                return Err(AppError::Validation(format!(
                    "{}: crop_id must be >= 1",
                    e.path.display()
                )));
            }
            if !(e.gsd_m > 0.0 && e.gsd_m.is_finite()) {
                return Err(AppError::Validation(format!("{}: gsd_m must be > 0", e.path.display())));
            }
            if !seen.insert(&e.path) {
                return Err(AppError::Validation(format!("duplicate path {}", e.path.display())));
            }
            let full = self.resolve(e);
            if !full.is_file() {
                return Err(AppError::io(
                    full,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "listed in manifest but missing"),
                ));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    /// Loads every crop; the manifest GSD overrides any tag in the file.
    pub fn load_crops(&self) -> Result<Vec<LabeledCrop>> {
        self.entries
            .iter()
            .map(|e| {
                let raster = load_raster(&self.resolve(e))?.with_gsd(e.gsd_m)?;
                let geography = e.geography.parse::<Geography>()?;
                Ok(LabeledCrop::new(geography, e.crop_id, raster)?)
            })
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = ManifestFile {
            root: None,
            crops: self.entries.clone(),
        };
        let text = toml::to_string(&file).map_err(|e| AppError::format(path, e))?;
        fs::write(path, text).map_err(|e| AppError::io(path, e))
    }
}

/// Writes the synthetic corpus as 16-bit PNGs plus `manifest.toml` into `dir`.
pub fn write_synthetic_corpus(dir: &Path, seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut entries = Vec::new();
    for crop in synth::corpus(seed)? {
        let name = PathBuf::from(format!("{}_{}.png", crop.geography, crop.crop_id));
        save_raster(&crop.raster, &dir.join(&name), BitDepth::Sixteen)?;
        entries.push(ManifestEntry {
            path: name,
            geography: crop.geography.to_string(),
            crop_id: crop.crop_id,
            gsd_m: crop.raster.gsd(),
        });
    }
    let manifest = DatasetManifest {
        root: dir.to_path_buf(),
        entries,
    };
    let path = dir.join("manifest.toml");
    manifest.write(&path)?;
    Ok(path)
}

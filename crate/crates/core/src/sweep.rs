//! Trade-space enumeration and the per-point degrade → super-resolve →
//! score pipeline.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::degrade::{degrade_with_psf, DegradeSpec};
use crate::hash::combine;
use crate::metrics;
use crate::optics::Psf;
use crate::raster::{BitDepth, Geography, LabeledCrop};
use crate::resample::Kernel;
use crate::{Error, Raster, Result};

pub const DEFAULT_GSD: [f64; 3] = [1.2, 1.8, 2.4];
pub const DEFAULT_GRD: [f64; 5] = [1.2, 1.55, 1.9, 2.25, 2.6];
pub const DEFAULT_SNR50: [f64; 10] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub gsd_values: Vec<f64>,
    pub grd_values: Vec<f64>,
    pub snr50_values: Vec<f64>,
    pub backend_id: String,
    pub global_seed: u64,
    pub bit: BitDepth,
    pub gsd_sensor: Option<f64>,
    pub resample_down: Kernel,
    pub resample_up: Kernel,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            gsd_values: DEFAULT_GSD.to_vec(),
            grd_values: DEFAULT_GRD.to_vec(),
            snr50_values: DEFAULT_SNR50.to_vec(),
            backend_id: "bicubic".to_string(),
            global_seed: 0,
            bit: BitDepth::Eight,
            gsd_sensor: None,
            resample_down: Kernel::AreaAverage,
            resample_up: Kernel::Bicubic,
        }
    }
}

fn check_axis(name: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param(name, "must not be empty"));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::param(name, alloc::format!("{v} (values must be > 0)")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(name, "must be strictly increasing"));
    }
    Ok(())
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        check_axis("gsd_values", &self.gsd_values)?;
        check_axis("grd_values", &self.grd_values)?;
        check_axis("snr50_values", &self.snr50_values)?;
        if self.backend_id.is_empty() {
            return Err(Error::param("backend_id", "must not be empty"));
        }
        Ok(())
    }

    pub fn point_count(&self) -> usize {
        self.gsd_values.len() * self.grd_values.len() * self.snr50_values.len()
    }

    /// Degradation parameters for one crop at one point.
    pub fn degrade_spec(&self, crop: &LabeledCrop, point: &TradeSpacePoint) -> DegradeSpec {
        DegradeSpec {
            gsd_sensor: self.gsd_sensor,
            bit: self.bit,
            resample_down: self.resample_down,
            resample_up: self.resample_up,
            ..DegradeSpec::new(
                crop.raster.gsd(),
                point.gsd_product,
                point.grd,
                point.snr50,
                derive_seed(self.global_seed, crop.geography, crop.crop_id, point),
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeSpacePoint {
    pub gsd_product: f64,
    pub grd: f64,
    pub snr50: f64,
}

impl TradeSpacePoint {
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.gsd_product
            .total_cmp(&other.gsd_product)
            .then(self.grd.total_cmp(&other.grd))
            .then(self.snr50.total_cmp(&other.snr50))
    }
}

/// Cartesian product of the grids, GSD outermost and SNR50 innermost.
pub fn enumerate_points(config: &SweepConfig) -> Result<Vec<TradeSpacePoint>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.point_count());
    for &gsd_product in &config.gsd_values {
        for &grd in &config.grd_values {
            for &snr50 in &config.snr50_values {
                out.push(TradeSpacePoint {
                    gsd_product,
                    grd,
                    snr50,
                });
            }
        }
    }
    Ok(out)
}

/// Noise seed for one crop at one point. Independent of execution order.
pub fn derive_seed(global_seed: u64, geography: Geography, crop_id: u32, point: &TradeSpacePoint) -> u64 {
    combine(&[
        global_seed,
        geography as u64,
        u64::from(crop_id),
        point.gsd_product.to_bits(),
        point.grd.to_bits(),
        point.snr50.to_bits(),
    ])
}

/// `round(gsd_product / gsd_original)`; only 2, 3 and 4 are supported.
pub fn select_scale(gsd_product: f64, gsd_original: f64) -> Result<u32> {
    let ratio = gsd_product / gsd_original;
    if !ratio.is_finite() || ratio <= 0.0 {
        return Err(Error::param(
            "gsd_product",
            alloc::format!("ratio {ratio} is not a valid scale"),
        ));
    }
    let scale = libm::round(ratio);
    if (2.0..=4.0).contains(&scale) {
        Ok(scale as u32)
    } else {
        Err(Error::UnsupportedScale(scale.min(u32::MAX as f64) as u32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub mse: f64,
    pub psnr_db: f64,
    pub ssim_global: f64,
    /// `None` when the crop is smaller than the SSIM window.
    pub ssim_win11: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Failed(String),
}

impl RunStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RunStatus::Ok)
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Ok => f.write_str("ok"),
            RunStatus::Failed(msg) => write!(f, "failed: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub geography: Geography,
    pub crop_id: u32,
    pub point: TradeSpacePoint,
    /// 0 when no scale could be selected.
    pub scale: u32,
    pub backend: String,
    pub metrics: Option<RunMetrics>,
    pub status: RunStatus,
    pub seed: u64,
}

impl RunRecord {
    /// A record for a point that could not be run.
    pub fn failed(
        crop: &LabeledCrop,
        point: &TradeSpacePoint,
        config: &SweepConfig,
        message: impl fmt::Display,
    ) -> Self {
        RunRecord {
            geography: crop.geography,
            crop_id: crop.crop_id,
            point: *point,
            scale: select_scale(point.gsd_product, crop.raster.gsd()).unwrap_or(0),
            backend: config.backend_id.clone(),
            metrics: None,
            status: RunStatus::Failed(message.to_string()),
            seed: derive_seed(config.global_seed, crop.geography, crop.crop_id, point),
        }
    }

    /// Canonical order: geography, crop id, GSD, GRD, SNR50.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.geography
            .cmp(&other.geography)
            .then(self.crop_id.cmp(&other.crop_id))
            .then(self.point.total_cmp(&other.point))
            .then(self.backend.cmp(&other.backend))
    }
}

pub fn sort_canonical(records: &mut [RunRecord]) {
    records.sort_by(RunRecord::canonical_cmp);
}

/// Degrades `crop` at `point` with the supplied PSF, upscales with
/// `upscale(image, scale)` and scores against the original. Failures are
/// captured in the returned record.
pub fn run_point<F, E>(
    crop: &LabeledCrop,
    point: &TradeSpacePoint,
    config: &SweepConfig,
    psf: &Psf,
    upscale: F,
) -> RunRecord
where
    F: FnOnce(&Raster, u32) -> core::result::Result<Raster, E>,
    E: fmt::Display,
{
    let spec = config.degrade_spec(crop, point);
    let outcome = (|| -> core::result::Result<(u32, RunMetrics), String> {
        let scale = select_scale(point.gsd_product, crop.raster.gsd()).map_err(|e| e.to_string())?;
        let degraded = degrade_with_psf(&crop.raster, &spec, psf).map_err(|e| e.to_string())?;
        let restored = upscale(&degraded.raster, scale).map_err(|e| e.to_string())?;
        let m = metrics::evaluate(&crop.raster, &restored, "", "").map_err(|e| e.to_string())?;
        Ok((
            scale,
            RunMetrics {
                mse: m.mse,
                psnr_db: m.psnr,
                ssim_global: m.ssim,
                ssim_win11: m.ssim_windowed,
            },
        ))
    })();
    match outcome {
        Ok((scale, metrics)) => RunRecord {
            geography: crop.geography,
            crop_id: crop.crop_id,
            point: *point,
            scale,
            backend: config.backend_id.clone(),
            metrics: Some(metrics),
            status: RunStatus::Ok,
            seed: spec.seed,
        },
        Err(msg) => RunRecord::failed(crop, point, config, msg),
    }
}

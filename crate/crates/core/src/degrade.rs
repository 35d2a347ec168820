//! The degradation chain: optical blur, resampling to the sensor grid, shot
//! noise, normalization and resampling to the product grid.

use alloc::vec::Vec;
use core::fmt;

use crate::filter;
use crate::hash::checksum;
use crate::noise::ShotNoise;
use crate::optics::{self, OpticsSpec, Psf};
use crate::raster::BitDepth;
use crate::resample::{self, Kernel};
use crate::{Error, Raster, Result};

/// Sensor pixel pitch used by the reference chain, m/px. Opt in through
/// [`DegradeSpec::gsd_sensor`].
pub const LITERAL_SENSOR_GSD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeSpec {
    pub gsd_original: f64,
    /// Requested sensor GSD. The effective value is never finer than the
    /// product GSD; `None` samples the sensor directly at the product GSD.
    pub gsd_sensor: Option<f64>,
    pub gsd_product: f64,
    pub snr50: f64,
    pub bit: BitDepth,
    pub grd: f64,
    pub seed: u64,
    pub resample_down: Kernel,
    pub resample_up: Kernel,
}

impl DegradeSpec {
    pub fn new(gsd_original: f64, gsd_product: f64, grd: f64, snr50: f64, seed: u64) -> Self {
        DegradeSpec {
            gsd_original,
            gsd_sensor: None,
            gsd_product,
            snr50,
            bit: BitDepth::Eight,
            grd,
            seed,
            resample_down: Kernel::AreaAverage,
            resample_up: Kernel::Bicubic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("gsd_original", self.gsd_original),
            ("gsd_product", self.gsd_product),
            ("snr50", self.snr50),
            ("grd", self.grd),
        ];
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, alloc::format!("{v} (must be > 0)")));
            }
        }
        if let Some(s) = self.gsd_sensor {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param("gsd_sensor", alloc::format!("{s} (must be > 0)")));
            }
        }
        Ok(())
    }

    pub fn effective_sensor_gsd(&self) -> f64 {
        self.gsd_sensor.unwrap_or(self.gsd_product).max(self.gsd_product)
    }

    /// `W = 2 SNR50^2`
    pub fn well_capacity(&self) -> f64 {
        crate::noise::well_capacity(self.snr50)
    }

    fn kernel_for(&self, from: f64, to: f64) -> Kernel {
        if to > from {
            self.resample_down
        } else {
            self.resample_up
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Blur,
    SensorResample,
    ShotNoise,
    Normalize,
    ProductResample,
}

impl Stage {
    pub const ORDER: [Stage; 5] = [
        Stage::Blur,
        Stage::SensorResample,
        Stage::ShotNoise,
        Stage::Normalize,
        Stage::ProductResample,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Blur => "blur",
            Stage::SensorResample => "sensor_resample",
            Stage::ShotNoise => "shot_noise",
            Stage::Normalize => "normalize",
            Stage::ProductResample => "product_resample",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageRecord {
    pub stage: Stage,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub checksum: u64,
}

impl StageRecord {
    fn of(stage: Stage, r: &Raster) -> Self {
        StageRecord {
            stage,
            width: r.width(),
            height: r.height(),
            channels: r.channels(),
            checksum: checksum(r.data()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegradedRaster {
    pub raster: Raster,
    pub spec: DegradeSpec,
    pub stage_log: Vec<StageRecord>,
}

/// Runs the full chain, building the PSF for `spec.grd` on the original grid.
pub fn degrade(image: &Raster, spec: &DegradeSpec, optics: &OpticsSpec) -> Result<DegradedRaster> {
    spec.validate()?;
    optics.validate()?;
    let psf = optics::psf_for_grd(spec.grd, optics, spec.gsd_original)?;
    degrade_with_psf(image, spec, &psf)
}

/// [`degrade`] with a precomputed PSF (it must match `spec.grd` and the original GSD).
pub fn degrade_with_psf(image: &Raster, spec: &DegradeSpec, psf: &Psf) -> Result<DegradedRaster> {
    spec.validate()?;
    if ((image.gsd() - spec.gsd_original) / spec.gsd_original).abs() > 1e-9 {
        return Err(Error::param(
            "gsd_original",
            alloc::format!("image GSD {} differs from spec {}", image.gsd(), spec.gsd_original),
        ));
    }
    let mut log = Vec::with_capacity(Stage::ORDER.len());

    let blurred = filter::blur(image, psf)?.clamp_unit();
    log.push(StageRecord::of(Stage::Blur, &blurred));

    let sensor_gsd = spec.effective_sensor_gsd();
    let kernel = spec.kernel_for(blurred.gsd(), sensor_gsd);
    let sensor = resample::resample(&blurred, sensor_gsd, kernel)?.clamp_unit();
    log.push(StageRecord::of(Stage::SensorResample, &sensor));

    let noise = ShotNoise::new(spec.snr50, spec.bit)?;
    let counts = noise.counts(&sensor, spec.seed)?;
    log.push(StageRecord {
        stage: Stage::ShotNoise,
        width: sensor.width(),
        height: sensor.height(),
        channels: sensor.channels(),
        checksum: checksum(&counts),
    });

    let sampled = sensor.with_data(noise.normalize(&counts));
    log.push(StageRecord::of(Stage::Normalize, &sampled));

    let kernel = spec.kernel_for(sensor_gsd, spec.gsd_product);
    let product = resample::resample(&sampled, spec.gsd_product, kernel)?.clamp_unit();
    log.push(StageRecord::of(Stage::ProductResample, &product));

    Ok(DegradedRaster {
        raster: product,
        spec: *spec,
        stage_log: log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::synth;

    #[test]
    fn stage_log_is_complete() {
        let img = synth::gradient(48, 48, 0.6);
        let spec = DegradeSpec::new(0.6, 1.2, 1.55, 30.0, 1);
        let out = degrade(&img, &spec, &OpticsSpec::default()).unwrap();
        let stages: Vec<Stage> = out.stage_log.iter().map(|s| s.stage).collect();
        assert_eq!(stages, Stage::ORDER);
        assert_eq!((out.raster.width(), out.raster.height()), (24, 24));
        assert_eq!(out.raster.gsd(), 1.2);
        assert!(out.raster.is_unit_range());
    }

    #[test]
    fn deterministic() {
        let img = synth::gradient(36, 36, 0.6);
        let spec = DegradeSpec::new(0.6, 1.8, 1.9, 20.0, 77);
        let a = degrade(&img, &spec, &OpticsSpec::default()).unwrap();
        let b = degrade(&img, &spec, &OpticsSpec::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_free_limit_matches_blur() {
        let img = synth::gradient(48, 48, 0.6);
        let spec = DegradeSpec::new(0.6, 0.6, 1.2, 1e6, 5);
        let optics = OpticsSpec::default();
        let out = degrade(&img, &spec, &optics).unwrap();
        let psf = optics::psf_for_grd(1.2, &optics, 0.6).unwrap();
        let blurred = filter::blur(&img, &psf).unwrap().clamp_unit();
        let ssim = metrics::ssim_global(&blurred, &out.raster).unwrap();
        assert!(ssim > 0.999, "{ssim}");
    }

    #[test]
    fn gsd_mismatch_rejected() {
        let img = synth::gradient(24, 24, 1.0);
        let spec = DegradeSpec::new(0.6, 1.2, 1.2, 10.0, 0);
        assert!(degrade(&img, &spec, &OpticsSpec::default()).is_err());
    }

    #[test]
    fn sensor_gsd_never_finer_than_product() {
        let mut spec = DegradeSpec::new(0.6, 2.4, 1.2, 10.0, 0);
        assert_eq!(spec.effective_sensor_gsd(), 2.4);
        spec.gsd_sensor = Some(1.0);
        assert_eq!(spec.effective_sensor_gsd(), 2.4);
        spec.gsd_sensor = Some(LITERAL_SENSOR_GSD);
        assert_eq!(spec.effective_sensor_gsd(), 3.0);
    }

    #[test]
    fn literal_sensor_chain_passes_through_coarse_grid() {
        let img = synth::gradient(60, 60, 0.6);
        let mut spec = DegradeSpec::new(0.6, 1.2, 1.2, 50.0, 2);
        spec.gsd_sensor = Some(LITERAL_SENSOR_GSD);
        let out = degrade(&img, &spec, &OpticsSpec::default()).unwrap();
        let sensor = out.stage_log[1];
        assert_eq!((sensor.width, sensor.height), (12, 12));
        assert_eq!((out.raster.width(), out.raster.height()), (30, 30));
    }
}

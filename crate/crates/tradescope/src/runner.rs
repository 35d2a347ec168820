//! Parallel execution of a trade-space sweep.

use std::collections::BTreeMap;

use log::{debug, info, warn};
use rayon::prelude::*;
use tradescope_core::optics::{self, OpticsSpec, Psf};
use tradescope_core::raster::LabeledCrop;
use tradescope_core::sweep::{self, RunRecord, SweepConfig};

use crate::backend::Registry;
use crate::error::{AppError, Result};

/// Worker count from an explicit value, else every available core.
pub fn resolve_jobs(jobs: Option<usize>) -> usize {
    jobs.filter(|&j| j > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every crop at every point on `jobs` threads. The result holds exactly
/// `crops.len() * points` records in canonical order, failures included.
pub fn run_sweep(
    config: &SweepConfig,
    crops: &[LabeledCrop],
    registry: &Registry,
    optics: &OpticsSpec,
    jobs: usize,
) -> Result<Vec<RunRecord>> {
    let points = sweep::enumerate_points(config)?;
    optics.validate()?;
    registry.get(&config.backend_id)?;
    if crops.is_empty() {
        return Err(AppError::Validation("no crops to sweep".into()));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| AppError::Validation(format!("thread pool: {e}")))?;

    // One PSF per (GRD, source GSD) pair.
    let mut keys: Vec<(u64, u64)> = crops
        .iter()
        .flat_map(|c| {
            config
                .grd_values
                .iter()
                .map(move |g| (g.to_bits(), c.raster.gsd().to_bits()))
        })
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let psfs: BTreeMap<(u64, u64), std::result::Result<Psf, String>> = pool.install(|| {
        keys.par_iter()
            .map(|&(grd, gsd)| {
                let psf =
                    optics::psf_for_grd(f64::from_bits(grd), optics, f64::from_bits(gsd)).map_err(|e| e.to_string());
                ((grd, gsd), psf)
            })
            .collect()
    });
    for ((grd, gsd), psf) in &psfs {
        match psf {
            Ok(p) => debug!(
                "psf grd={} gsd={}: support {}",
                f64::from_bits(*grd),
                f64::from_bits(*gsd),
                p.support
            ),
            Err(e) => warn!("psf grd={} gsd={}: {e}", f64::from_bits(*grd), f64::from_bits(*gsd)),
        }
    }

    let tasks: Vec<(usize, usize)> = (0..crops.len())
        .flat_map(|c| (0..points.len()).map(move |p| (c, p)))
        .collect();
    info!(
        "sweeping {} crops x {} points with `{}` on {} threads",
        crops.len(),
        points.len(),
        config.backend_id,
        jobs
    );
    let mut records: Vec<RunRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, p)| {
                let crop = &crops[c];
                let point = &points[p];
                match &psfs[&(point.grd.to_bits(), crop.raster.gsd().to_bits())] {
                    Ok(psf) => sweep::run_point(crop, point, config, psf, |img, scale| {
                        registry.upscale(&config.backend_id, img, scale).map(|r| r.output)
                    }),
                    Err(msg) => RunRecord::failed(crop, point, config, msg),
                }
            })
            .collect()
    });
    sweep::sort_canonical(&mut records);
    let failed = records.iter().filter(|r| !r.status.is_ok()).count();
    if failed > 0 {
        warn!("{failed} of {} runs failed", records.len());
    }
    Ok(records)
}

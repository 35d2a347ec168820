//! Full-reference image quality metrics.
//!
//! All metrics work on unit intensities, so the dynamic range is `L = 1`
//! unless stated otherwise. Multi-channel images are scored per channel and
//! the channel scores averaged.

use alloc::string::String;
use alloc::vec::Vec;

use crate::resample::{self, Kernel};
use crate::{Error, Raster, Result};

/// Dynamic range of unit intensities.
pub const UNIT_RANGE: f64 = 1.0;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

fn check_shapes(reference: &Raster, candidate: &Raster) -> Result<()> {
    if reference.same_shape(candidate) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(alloc::format!(
            "reference is {}x{}x{}, candidate is {}x{}x{}",
            reference.width(),
            reference.height(),
            reference.channels(),
            candidate.width(),
            candidate.height(),
            candidate.channels()
        )))
    }
}

/// Mean of squared sample differences over all samples and channels.
pub fn mse(reference: &Raster, candidate: &Raster) -> Result<f64> {
    check_shapes(reference, candidate)?;
    let sum: f64 = reference
        .data()
        .iter()
        .zip(candidate.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.len() as f64)
}

/// `10 log10(L^2 / mse)`; `INFINITY` when the images are identical.
pub fn psnr_from_mse(mse: f64, range: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * libm::log10(range * range / mse)
    }
}

pub fn psnr(reference: &Raster, candidate: &Raster, range: f64) -> Result<f64> {
    if range.is_nan() || range <= 0.0 {
        return Err(Error::param("range", alloc::format!("{range} (must be > 0)")));
    }
    Ok(psnr_from_mse(mse(reference, candidate)?, range))
}

fn ssim_terms(mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64, range: f64) -> f64 {
    let c1 = (SSIM_K1 * range) * (SSIM_K1 * range);
    let c2 = (SSIM_K2 * range) * (SSIM_K2 * range);
    ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
}

/// SSIM evaluated once over the whole image (population statistics).
pub fn ssim_global(reference: &Raster, candidate: &Raster) -> Result<f64> {
    ssim_global_with_range(reference, candidate, UNIT_RANGE)
}

pub fn ssim_global_with_range(reference: &Raster, candidate: &Raster, range: f64) -> Result<f64> {
    check_shapes(reference, candidate)?;
    let c = reference.channels();
    let mut total = 0.0;
    for ch in 0..c {
        let a = reference.plane(ch);
        let b = candidate.plane(ch);
        let n = a.len() as f64;
        let mu_a = a.iter().sum::<f64>() / n;
        let mu_b = b.iter().sum::<f64>() / n;
        let mut var_a = 0.0;
        let mut var_b = 0.0;
        let mut cov = 0.0;
        for (x, y) in a.iter().zip(&b) {
            let da = x - mu_a;
            let db = y - mu_b;
            var_a += da * da;
            var_b += db * db;
            cov += da * db;
        }
        total += ssim_terms(mu_a, mu_b, var_a / n, var_b / n, cov / n, range);
    }
    Ok(total / c as f64)
}

fn gaussian_taps() -> Vec<f64> {
    let h = (SSIM_WINDOW / 2) as f64;
    let taps: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - h;
            libm::exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Valid-region separable filtering: `(w - s + 1) x (h - s + 1)` output.
fn filter_valid(plane: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let s = taps.len();
    let ow = w - s + 1;
    let oh = h - s + 1;
    let mut rows = alloc::vec![0.0; ow * h];
    for y in 0..h {
        let src = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().zip(&src[x..x + s]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = alloc::vec![0.0; ow * oh];
    for y in 0..oh {
        for (j, t) in taps.iter().enumerate() {
            let src = &rows[(y + j) * ow..(y + j + 1) * ow];
            for (o, v) in out[y * ow..(y + 1) * ow].iter_mut().zip(src) {
                *o += t * v;
            }
        }
    }
    out
}

/// Mean SSIM over every fully contained 11x11 Gaussian window (sigma 1.5).
pub fn ssim_windowed(reference: &Raster, candidate: &Raster) -> Result<f64> {
    check_shapes(reference, candidate)?;
    let (w, h) = (reference.width(), reference.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{w}x{h} image is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )));
    }
    let taps = gaussian_taps();
    let c = reference.channels();
    let mut total = 0.0;
    let mut count = 0usize;
    for ch in 0..c {
        let a = reference.plane(ch);
        let b = candidate.plane(ch);
        let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
        let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let mu_a = filter_valid(&a, w, h, &taps);
        let mu_b = filter_valid(&b, w, h, &taps);
        let e_aa = filter_valid(&aa, w, h, &taps);
        let e_bb = filter_valid(&bb, w, h, &taps);
        let e_ab = filter_valid(&ab, w, h, &taps);
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_aa[i] - ma * ma;
            let var_b = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            total += ssim_terms(ma, mb, var_a, var_b, cov, UNIT_RANGE);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Resamples `candidate` (bicubic) onto the pixel grid of `reference`.
///
/// Both must cover the same ground extent to within one reference pixel.
pub fn align_for_metric(candidate: &Raster, reference: &Raster) -> Result<Raster> {
    let (cw, ch) = candidate.extent();
    let (rw, rh) = reference.extent();
    let tol = reference.gsd() * (1.0 + 1e-9);
    if (cw - rw).abs() > tol || (ch - rh).abs() > tol {
        return Err(Error::DimensionMismatch(alloc::format!(
            "candidate covers {cw:.3}x{ch:.3} m, reference {rw:.3}x{rh:.3} m"
        )));
    }
    if candidate.channels() != reference.channels() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} vs {} channels",
            candidate.channels(),
            reference.channels()
        )));
    }
    if candidate.width() == reference.width() && candidate.height() == reference.height() {
        return Ok(candidate.clone());
    }
    resample::resize(candidate, reference.width(), reference.height(), Kernel::Bicubic)?
        .with_gsd(reference.gsd())
        .map(Raster::clamp_unit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub mse: f64,
    pub psnr: f64,
    pub ssim: f64,
    /// Windowed SSIM; `None` for images smaller than the window.
    pub ssim_windowed: Option<f64>,
    pub reference_id: String,
    pub candidate_id: String,
}

/// Aligns `candidate` to `reference` and computes every metric.
pub fn evaluate(
    reference: &Raster,
    candidate: &Raster,
    reference_id: impl Into<String>,
    candidate_id: impl Into<String>,
) -> Result<MetricRecord> {
    let aligned = align_for_metric(candidate, reference)?;
    let mse = mse(reference, &aligned)?;
    let ssim_windowed = match ssim_windowed(reference, &aligned) {
        Ok(v) => Some(v),
        Err(Error::DimensionMismatch(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricRecord {
        mse,
        psnr: psnr_from_mse(mse, UNIT_RANGE),
        ssim: ssim_global(reference, &aligned)?,
        ssim_windowed,
        reference_id: reference_id.into(),
        candidate_id: candidate_id.into(),
    })
}

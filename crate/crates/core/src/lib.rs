//! Trade-space simulation core for overhead imagery.
//!
//! This crate holds every numerical stage of the pipeline and is `no_std`
//! (it only needs `alloc`):
//!
//! - [`raster`]: the floating point image type, quantization rules and cropping
//! - [`optics`]: annular pupil, MTF (pupil autocorrelation), PSF and the
//!   aperture/GRD relation
//! - [`filter`]: 2D convolution with reflected borders (direct and FFT routes)
//! - [`resample`]: area-average, nearest, bilinear, bicubic and Lanczos-3 resizing
//! - [`noise`]: SNR50-calibrated Poisson shot noise
//! - [`degrade`]: the full blur → sensor resample → shot noise → product resample chain
//! - [`metrics`]: MSE, PSNR, global and windowed SSIM, grid alignment
//! - [`edsr`]: forward-only EDSR inference and its weight file format
//! - [`sweep`] and [`stats`]: trade-space enumeration, run records and
//!   box-plot / heatmap aggregation
//! - [`synth`]: a seeded synthetic corpus with five terrain-like textures
//!
//! File formats, processes, threads and the command line live in the
//! `tradescope` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod degrade;
pub mod edsr;
mod error;
pub mod fft;
pub mod filter;
pub mod hash;
pub mod metrics;
pub mod noise;
pub mod optics;
pub mod raster;
pub mod resample;
pub mod stats;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
pub use raster::{Geography, LabeledCrop, Raster};

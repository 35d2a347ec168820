//! Diffraction-limited optics of a centrally obscured circular aperture.
//!
//! The chain is pupil → MTF → PSF:
//!
//! - the pupil is a binary annulus sampled on a square frequency grid,
//! - the MTF is the normalized autocorrelation of the pupil, computed as
//!   `ifft(|fft(pupil)|^2)`,
//! - the PSF is the inverse transform of the MTF, clipped, truncated to the
//!   window holding 99.99% of its energy and renormalized to unit sum.
//!
//! [`psf_for_grd`] places the optical cutoff `D / (lambda H)` on the
//! frequency grid of a target image so that the resulting kernel can be
//! convolved directly with that image.

use alloc::vec::Vec;

use crate::fft::{self, Complex64, Direction};
use crate::{Error, Result};

pub const DEFAULT_WAVELENGTH_M: f64 = 560e-9;
pub const DEFAULT_ALTITUDE_M: f64 = 500e3;
pub const DEFAULT_OBSCURATION: f64 = 0.4;
/// Rayleigh criterion factor for a circular aperture.
pub const RAYLEIGH: f64 = 1.22;
/// Side of the pixel grid on which [`psf_for_grd`] builds kernels.
pub const DEFAULT_PSF_GRID: usize = 128;
/// Side of the grid used by [`pupil_mask`] for stand-alone MTFs.
pub const DEFAULT_PUPIL_GRID: usize = 512;

const NEGATIVE_ENERGY_LIMIT: f64 = 1e-6;
const ENERGY_WINDOW: f64 = 0.9999;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticsSpec {
    pub wavelength: f64,
    pub altitude: f64,
    pub aperture_diameter: f64,
    pub obscuration: f64,
}

impl Default for OpticsSpec {
    fn default() -> Self {
        OpticsSpec {
            wavelength: DEFAULT_WAVELENGTH_M,
            altitude: DEFAULT_ALTITUDE_M,
            aperture_diameter: 0.28,
            obscuration: DEFAULT_OBSCURATION,
        }
    }
}

impl OpticsSpec {
    pub fn validate(&self) -> Result<()> {
        positive("wavelength", self.wavelength)?;
        positive("altitude", self.altitude)?;
        positive("aperture_diameter", self.aperture_diameter)?;
        if !(0.0..1.0).contains(&self.obscuration) {
            return Err(Error::param(
                "obscuration",
                alloc::format!("{} (must be in [0, 1))", self.obscuration),
            ));
        }
        Ok(())
    }

    /// Same wavelength, altitude and obscuration, with the aperture sized for `grd`.
    pub fn with_grd(&self, grd: f64) -> Result<Self> {
        let aperture_diameter = aperture_from_grd(grd, self.wavelength, self.altitude)?;
        let spec = OpticsSpec {
            aperture_diameter,
            ..*self
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Optical cutoff `D / (lambda H)` in cycles per meter on the ground.
    pub fn cutoff_frequency(&self) -> f64 {
        self.aperture_diameter / (self.wavelength * self.altitude)
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, alloc::format!("{v} (must be > 0)")))
    }
}

/// `GRD = 1.22 lambda H / D`
pub fn grd_from_aperture(spec: &OpticsSpec) -> f64 {
    RAYLEIGH * spec.wavelength * spec.altitude / spec.aperture_diameter
}

/// Aperture diameter giving `grd` at the given wavelength and altitude.
pub fn aperture_from_grd(grd: f64, wavelength: f64, altitude: f64) -> Result<f64> {
    positive("grd", grd)?;
    positive("wavelength", wavelength)?;
    positive("altitude", altitude)?;
    Ok(RAYLEIGH * wavelength * altitude / grd)
}

/// Binary annular transmittance on a square grid.
///
/// Sample `(i, j)` sits at `(i - (n-1)/2, j - (n-1)/2)` so the mask is
/// symmetric under `i -> n-1-i` and no sample lies exactly on the optical
/// axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PupilMask {
    pub grid_n: usize,
    pub values: Vec<u8>,
    pub outer_radius: f64,
    pub obscuration: f64,
    /// Spatial frequency spanned by one grid step, cycles/m (1.0 for unitless grids).
    pub frequency_step: f64,
}

impl PupilMask {
    pub fn open_samples(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }

    /// Distance of sample `(i, j)` from the grid center, in grid units.
    pub fn radius_at(&self, i: usize, j: usize) -> f64 {
        let c = (self.grid_n as f64 - 1.0) / 2.0;
        libm::hypot(i as f64 - c, j as f64 - c)
    }
}

/// Pupil whose outer diameter spans half of a `grid_n` grid.
pub fn pupil_mask(grid_n: usize, obscuration: f64) -> Result<PupilMask> {
    if grid_n < 64 || !grid_n.is_multiple_of(2) {
        return Err(Error::param(
            "grid_n",
            alloc::format!("{grid_n} (must be even and >= 64)"),
        ));
    }
    annular_pupil(grid_n, grid_n as f64 / 4.0, obscuration, 1.0)
}

/// Pupil with an arbitrary outer radius (grid units). The autocorrelation
/// support must fit the grid without wrapping, i.e. `4 * outer_radius <= grid_n`.
pub fn annular_pupil(grid_n: usize, outer_radius: f64, obscuration: f64, frequency_step: f64) -> Result<PupilMask> {
    if !grid_n.is_power_of_two() || grid_n < 2 {
        return Err(Error::param(
            "grid_n",
            alloc::format!("{grid_n} (must be a power of two)"),
        ));
    }
    if !(0.0..1.0).contains(&obscuration) {
        return Err(Error::param(
            "obscuration",
            alloc::format!("{obscuration} (must be in [0, 1))"),
        ));
    }
    positive("frequency_step", frequency_step)?;
    if !(outer_radius > 0.0 && 4.0 * outer_radius <= grid_n as f64) {
        return Err(Error::param(
            "outer_radius",
            alloc::format!("{outer_radius} does not fit a {grid_n} grid"),
        ));
    }
    let inner = obscuration * outer_radius;
    let c = (grid_n as f64 - 1.0) / 2.0;
    let mut values = Vec::with_capacity(grid_n * grid_n);
    for j in 0..grid_n {
        for i in 0..grid_n {
            let r = libm::hypot(i as f64 - c, j as f64 - c);
            values.push(u8::from(inner < r && r <= outer_radius));
        }
    }
    Ok(PupilMask {
        grid_n,
        values,
        outer_radius,
        obscuration,
        frequency_step,
    })
}

/// Peak-normalized MTF with zero frequency at `(grid_n/2, grid_n/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mtf {
    pub grid_n: usize,
    pub values: Vec<f64>,
    /// Cutoff radius in grid samples (`INFINITY` for a flat MTF).
    pub cutoff_samples: f64,
    pub frequency_step: f64,
}

impl Mtf {
    /// Ideal, unattenuated transfer function.
    pub fn flat(grid_n: usize, frequency_step: f64) -> Self {
        Mtf {
            grid_n,
            values: alloc::vec![1.0; grid_n * grid_n],
            cutoff_samples: f64::INFINITY,
            frequency_step,
        }
    }

    pub fn cutoff_frequency(&self) -> f64 {
        self.cutoff_samples * self.frequency_step
    }

    pub fn dc(&self) -> f64 {
        let h = self.grid_n / 2;
        self.values[h * self.grid_n + h]
    }

    /// Distance of sample `(i, j)` from zero frequency, in samples.
    pub fn radius_at(&self, i: usize, j: usize) -> f64 {
        let h = (self.grid_n / 2) as f64;
        libm::hypot(i as f64 - h, j as f64 - h)
    }

    /// Fraction of the total MTF mass at radii `>= cutoff_samples`.
    pub fn out_of_band_fraction(&self, cutoff_samples: f64) -> f64 {
        let n = self.grid_n;
        let mut total = 0.0;
        let mut outside = 0.0;
        for j in 0..n {
            for i in 0..n {
                let v = self.values[j * n + i];
                total += v;
                if self.radius_at(i, j) >= cutoff_samples {
                    outside += v;
                }
            }
        }
        outside / total
    }
}

/// Autocorrelation of the pupil through the Fourier route, normalized to 1 at zero shift.
pub fn mtf_from_pupil(pupil: &PupilMask) -> Mtf {
    let n = pupil.grid_n;
    let mut field: Vec<Complex64> = pupil
        .values
        .iter()
        .map(|&v| Complex64::new(f64::from(v), 0.0))
        .collect();
    fft::fft2(&mut field, n, n, Direction::Forward);
    for v in &mut field {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    fft::fft2(&mut field, n, n, Direction::Inverse);

    let peak = field[0].re;
    let raw: Vec<f64> = field.iter().map(|v| (v.re / peak).max(0.0)).collect();
    let mut values = fft::fftshift2(&raw, n);
    // Pin zero frequency exactly; the division above already gives 1 up to rounding.
    values[(n / 2) * n + n / 2] = 1.0;
    Mtf {
        grid_n: n,
        values,
        cutoff_samples: 2.0 * pupil.outer_radius,
        frequency_step: pupil.frequency_step,
    }
}

/// Normalized blur kernel centered in an odd `support x support` window.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf {
    pub kernel: Vec<f64>,
    pub support: usize,
    /// Ground meters per kernel sample.
    pub pixel_scale: f64,
}

impl Psf {
    /// Single unit tap.
    pub fn delta(pixel_scale: f64) -> Self {
        Psf {
            kernel: alloc::vec![1.0],
            support: 1,
            pixel_scale,
        }
    }

    pub fn half_width(&self) -> usize {
        self.support / 2
    }

    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let h = self.half_width() as isize;
        self.kernel[((dy + h) as usize) * self.support + (dx + h) as usize]
    }

    pub fn center_weight(&self) -> f64 {
        self.at(0, 0)
    }

    pub fn sum(&self) -> f64 {
        self.kernel.iter().sum()
    }

    /// Largest deviation between `k(x, y)` and `k(-x, -y)`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.kernel.len();
        (0..n)
            .map(|i| (self.kernel[i] - self.kernel[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }

    /// `sqrt(sum w r^2)` in kernel pixels.
    pub fn second_moment_radius(&self) -> f64 {
        let h = self.half_width() as isize;
        let mut acc = 0.0;
        for dy in -h..=h {
            for dx in -h..=h {
                acc += self.at(dx, dy) * (dx * dx + dy * dy) as f64;
            }
        }
        libm::sqrt(acc)
    }
}

/// Inverse transform of the MTF: a real, nonnegative, unit-sum kernel.
pub fn psf_from_mtf(mtf: &Mtf) -> Result<Psf> {
    let n = mtf.grid_n;
    let centered = centered_psf(mtf)?;
    let pixel_scale = 1.0 / (n as f64 * mtf.frequency_step);
    Ok(truncate(&centered, n, n / 2, pixel_scale))
}

/// Kernel sampled on the pixel grid of an image with GSD `target_gsd`, for
/// optics whose aperture is sized to give `grd`.
pub fn psf_for_grd(grd: f64, spec: &OpticsSpec, target_gsd: f64) -> Result<Psf> {
    psf_for_grd_on_grid(grd, spec, target_gsd, DEFAULT_PSF_GRID)
}

/// [`psf_for_grd`] on a `grid_n` x `grid_n` pixel grid (power of two).
///
/// The pupil is laid out on a `2 grid_n` frequency grid with step
/// `1 / (grid_n gsd)`, so the MTF cutoff lands on `D / (lambda H)` and the
/// full autocorrelation support fits without wrapping. The resulting PSF is
/// sampled at `gsd / 2` and decimated to the image grid, which folds any
/// spectrum above the image Nyquist frequency back into the band the way
/// point sampling does.
pub fn psf_for_grd_on_grid(grd: f64, spec: &OpticsSpec, target_gsd: f64, grid_n: usize) -> Result<Psf> {
    positive("grd", grd)?;
    positive("target_gsd", target_gsd)?;
    let limit = 2.0 * target_gsd;
    if grd < limit * (1.0 - 1e-12) {
        return Err(Error::OpticsUnresolvable {
            grd,
            gsd: target_gsd,
            limit,
        });
    }
    if !grid_n.is_power_of_two() || grid_n < 8 {
        return Err(Error::param("grid_n", alloc::format!("{grid_n} (power of two >= 8)")));
    }
    let optics = spec.with_grd(grd)?;
    let cutoff = optics.cutoff_frequency();
    let fine_n = 2 * grid_n;
    let step = 1.0 / (grid_n as f64 * target_gsd);
    let pupil = annular_pupil(fine_n, cutoff / (2.0 * step), optics.obscuration, step)?;
    let mtf = mtf_from_pupil(&pupil);
    let fine = centered_psf(&mtf)?;

    let center = fine_n / 2;
    let half = grid_n / 2;
    let mut coarse = Vec::with_capacity(grid_n * grid_n);
    for j in 0..grid_n {
        for i in 0..grid_n {
            let fy = center + 2 * j - 2 * half;
            let fx = center + 2 * i - 2 * half;
            coarse.push(fine[fy * fine_n + fx]);
        }
    }
    Ok(truncate(&coarse, grid_n, half, target_gsd))
}

/// Real part of the inverse transform, centered at `(n/2, n/2)`, with
/// negative ringing clipped after checking it is negligible.
fn centered_psf(mtf: &Mtf) -> Result<Vec<f64>> {
    let n = mtf.grid_n;
    let unshifted = fft::fftshift2(&mtf.values, n);
    let mut field: Vec<Complex64> = unshifted.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::fft2(&mut field, n, n, Direction::Inverse);
    let real: Vec<f64> = field.iter().map(|v| v.re).collect();
    let mut psf = fft::fftshift2(&real, n);

    let negative: f64 = psf.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
    let total: f64 = psf.iter().map(|v| v.abs()).sum();
    let fraction = negative / total;
    if fraction > NEGATIVE_ENERGY_LIMIT {
        return Err(Error::NegativePsf { fraction });
    }
    for v in &mut psf {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(psf)
}

/// Crops to the smallest centered odd window holding `ENERGY_WINDOW` of the
/// total and renormalizes.
fn truncate(grid: &[f64], n: usize, center: usize, pixel_scale: f64) -> Psf {
    let total: f64 = grid.iter().sum();
    let max_half = center.min(n - 1 - center);
    // Energy of the square ring at Chebyshev distance h from the center.
    let mut ring = alloc::vec![0.0; max_half + 1];
    for y in 0..n {
        for x in 0..n {
            let d = x.abs_diff(center).max(y.abs_diff(center));
            if d <= max_half {
                ring[d] += grid[y * n + x];
            }
        }
    }
    let mut half = max_half;
    let mut acc = 0.0;
    for (h, e) in ring.iter().enumerate() {
        acc += e;
        if acc >= ENERGY_WINDOW * total {
            half = h;
            break;
        }
    }

    let support = 2 * half + 1;
    let mut kernel = Vec::with_capacity(support * support);
    for y in center - half..=center + half {
        kernel.extend_from_slice(&grid[y * n + center - half..=y * n + center + half]);
    }
    let sum: f64 = kernel.iter().sum();
    for v in &mut kernel {
        *v /= sum;
    }
    Psf {
        kernel,
        support,
        pixel_scale,
    }
}

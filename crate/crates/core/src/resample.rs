//! Separable image resizing.
//!
//! Pixel `j` of an `n`-sample output axis covers input coordinates
//! `[j s, (j + 1) s)` with `s = in / out`. Interpolating kernels are
//! stretched by `s` when shrinking so they also low-pass; samples beyond the
//! border repeat the edge value.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Raster, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    /// Box average over the output footprint (detector integration).
    AreaAverage,
    Nearest,
    Bilinear,
    /// Keys cubic convolution, `a = -0.5`.
    Bicubic,
    Lanczos3,
}

impl Kernel {
    pub const ALL: [Kernel; 5] = [
        Kernel::AreaAverage,
        Kernel::Nearest,
        Kernel::Bilinear,
        Kernel::Bicubic,
        Kernel::Lanczos3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kernel::AreaAverage => "area",
            Kernel::Nearest => "nearest",
            Kernel::Bilinear => "bilinear",
            Kernel::Bicubic => "bicubic",
            Kernel::Lanczos3 => "lanczos3",
        }
    }

    fn radius(self) -> f64 {
        match self {
            Kernel::AreaAverage | Kernel::Nearest => 0.5,
            Kernel::Bilinear => 1.0,
            Kernel::Bicubic => 2.0,
            Kernel::Lanczos3 => 3.0,
        }
    }

    fn eval(self, t: f64) -> f64 {
        let t = t.abs();
        match self {
            Kernel::AreaAverage | Kernel::Nearest => f64::from(u8::from(t < 0.5)),
            Kernel::Bilinear => (1.0 - t).max(0.0),
            Kernel::Bicubic => {
                const A: f64 = -0.5;
                if t <= 1.0 {
                    ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
                } else if t < 2.0 {
                    ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
                } else {
                    0.0
                }
            }
            Kernel::Lanczos3 => {
                if t < 1e-12 {
                    1.0
                } else if t < 3.0 {
                    let x = PI * t;
                    3.0 * libm::sin(x) * libm::sin(x / 3.0) / (x * x)
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::param("kernel", alloc::format!("unknown resampling kernel `{s}`")))
    }
}

/// Per-output-sample source taps along one axis.
struct AxisWeights {
    taps: Vec<Vec<(usize, f64)>>,
}

impl AxisWeights {
    fn new(in_n: usize, out_n: usize, kernel: Kernel) -> Self {
        let s = in_n as f64 / out_n as f64;
        let taps = (0..out_n)
            .map(|j| match kernel {
                Kernel::Nearest => {
                    let i = libm::floor((j as f64 + 0.5) * s) as usize;
                    alloc::vec![(i.min(in_n - 1), 1.0)]
                }
                Kernel::AreaAverage => {
                    let lo = j as f64 * s;
                    let hi = (j + 1) as f64 * s;
                    let first = libm::floor(lo) as usize;
                    let last = (libm::ceil(hi) as usize).min(in_n);
                    let mut row: Vec<(usize, f64)> = (first..last)
                        .map(|i| {
                            let overlap = hi.min(i as f64 + 1.0) - lo.max(i as f64);
                            (i, overlap.max(0.0))
                        })
                        .filter(|&(_, w)| w > 0.0)
                        .collect();
                    normalize(&mut row);
                    row
                }
                _ => {
                    let stretch = s.max(1.0);
                    let center = (j as f64 + 0.5) * s - 0.5;
                    let reach = kernel.radius() * stretch;
                    let first = libm::ceil(center - reach) as isize;
                    let last = libm::floor(center + reach) as isize;
                    let mut row: Vec<(usize, f64)> = Vec::new();
                    for i in first..=last {
                        let w = kernel.eval((i as f64 - center) / stretch);
                        if w != 0.0 {
                            let idx = i.clamp(0, in_n as isize - 1) as usize;
                            match row.iter_mut().find(|(k, _)| *k == idx) {
                                Some(t) => t.1 += w,
                                None => row.push((idx, w)),
                            }
                        }
                    }
                    normalize(&mut row);
                    row
                }
            })
            .collect();
        AxisWeights { taps }
    }
}

fn normalize(row: &mut [(usize, f64)]) {
    let sum: f64 = row.iter().map(|(_, w)| w).sum();
    for (_, w) in row.iter_mut() {
        *w /= sum;
    }
}

/// Resizes to exactly `out_w` x `out_h` pixels. The GSD scales with the width ratio.
pub fn resize(image: &Raster, out_w: usize, out_h: usize, kernel: Kernel) -> Result<Raster> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::param("dims", "output must be at least 1x1"));
    }
    let (w, h, c) = (image.width(), image.height(), image.channels());
    let gsd = image.gsd() * w as f64 / out_w as f64;
    if (w, h) == (out_w, out_h) {
        return Ok(image.clone());
    }
    let xw = AxisWeights::new(w, out_w, kernel);
    let yw = AxisWeights::new(h, out_h, kernel);
    let src = image.data();

    let mut horizontal = alloc::vec![0.0; out_w * h * c];
    for y in 0..h {
        for (x, taps) in xw.taps.iter().enumerate() {
            for ch in 0..c {
                let mut acc = 0.0;
                for &(i, wt) in taps {
                    acc += wt * src[(y * w + i) * c + ch];
                }
                horizontal[(y * out_w + x) * c + ch] = acc;
            }
        }
    }
    let mut out = alloc::vec![0.0; out_w * out_h * c];
    for (y, taps) in yw.taps.iter().enumerate() {
        for x in 0..out_w {
            for ch in 0..c {
                let mut acc = 0.0;
                for &(i, wt) in taps {
                    acc += wt * horizontal[(i * out_w + x) * c + ch];
                }
                out[(y * out_w + x) * c + ch] = acc;
            }
        }
    }
    Ok(Raster::shaped(out_w, out_h, c, out, gsd))
}

/// Output size along one axis when going from `gsd_in` to `target_gsd`.
pub fn resampled_len(n: usize, gsd_in: f64, target_gsd: f64) -> usize {
    libm::round(n as f64 * gsd_in / target_gsd) as usize
}

/// Resamples onto a grid with pixel size `target_gsd`.
pub fn resample(image: &Raster, target_gsd: f64, kernel: Kernel) -> Result<Raster> {
    if !(target_gsd > 0.0 && target_gsd.is_finite()) {
        return Err(Error::param("target_gsd", alloc::format!("{target_gsd} (must be > 0)")));
    }
    if ((image.gsd() - target_gsd) / target_gsd).abs() < 1e-12 {
        return Ok(image.clone());
    }
    let out_w = resampled_len(image.width(), image.gsd(), target_gsd);
    let out_h = resampled_len(image.height(), image.gsd(), target_gsd);
    if out_w == 0 || out_h == 0 {
        return Err(Error::EmptyResample { target: target_gsd });
    }
    resize(image, out_w, out_h, kernel)?.with_gsd(target_gsd)
}

/// Integer upscaling by `scale` along both axes.
pub fn upscale(image: &Raster, scale: usize, kernel: Kernel) -> Result<Raster> {
    resize(image, image.width() * scale, image.height() * scale, kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mse(a: &Raster, b: &Raster) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / a.len() as f64
    }

    #[test]
    fn unit_ratio_is_identity() {
        let img = Raster::new(3, 2, 1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 0.6).unwrap();
        for k in Kernel::ALL {
            assert_eq!(resample(&img, 0.6, k).unwrap(), img);
        }
    }

    #[test]
    fn checkerboard_area_average() {
        let data: Vec<f64> = (0..64).map(|i| f64::from(((i % 8) + (i / 8)) % 2)).collect();
        let img = Raster::new(8, 8, 1, data, 1.0).unwrap();
        let out = resample(&img, 2.0, Kernel::AreaAverage).unwrap();
        assert_eq!((out.width(), out.height()), (4, 4));
        assert!(out.data().iter().all(|&v| v == 0.5));
        assert_eq!(out.gsd(), 2.0);
    }

    #[test]
    fn area_average_preserves_mean_for_integer_ratios() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let img = Raster::new(24, 24, 3, (0..24 * 24 * 3).map(|_| rng.random()).collect(), 0.6).unwrap();
        for target in [1.2, 1.8, 2.4] {
            let out = resample(&img, target, Kernel::AreaAverage).unwrap();
            assert!((out.mean() - img.mean()).abs() < 1e-6);
        }
    }

    #[test]
    fn output_dims_follow_rounding() {
        let img = Raster::filled(10, 7, 1, 0.2, 1.0).unwrap();
        let out = resample(&img, 3.0, Kernel::AreaAverage).unwrap();
        assert_eq!((out.width(), out.height()), (3, 2));
        assert!(matches!(
            resample(&img, 100.0, Kernel::AreaAverage),
            Err(Error::EmptyResample { .. })
        ));
    }

    #[test]
    fn constants_survive_every_kernel() {
        let img = Raster::filled(9, 6, 3, 0.42, 1.0).unwrap();
        for k in Kernel::ALL {
            for (w, h) in [(27, 18), (4, 3), (13, 5)] {
                let out = resize(&img, w, h, k).unwrap();
                assert!(out.data().iter().all(|v| (v - 0.42).abs() < 1e-9), "{k}");
            }
        }
    }

    #[test]
    fn nearest_replicates() {
        let img = Raster::new(1, 1, 1, vec![0.3], 1.0).unwrap();
        let out = upscale(&img, 2, Kernel::Nearest).unwrap();
        assert_eq!(out.data(), &[0.3; 4]);
        assert_eq!(out.gsd(), 0.5);
    }

    #[test]
    fn smooth_content_survives_round_trip_better_than_noise() {
        let n = 48;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gradient: Vec<f64> = (0..n * n)
            .map(|i| ((i % n) + (i / n)) as f64 / (2 * n) as f64)
            .collect();
        let noise: Vec<f64> = (0..n * n).map(|_| rng.random()).collect();
        let errs: Vec<f64> = [gradient, noise]
            .into_iter()
            .map(|d| {
                let img = Raster::new(n, n, 1, d, 1.0).unwrap();
                let down = resample(&img, 2.0, Kernel::AreaAverage).unwrap();
                let up = resample(&down, 1.0, Kernel::Bicubic).unwrap();
                mse(&img, &up)
            })
            .collect();
        assert!(errs[0] < errs[1], "{errs:?}");
    }

    #[test]
    fn kernel_names_parse() {
        for k in Kernel::ALL {
            assert_eq!(k.as_str().parse::<Kernel>().unwrap(), k);
        }
        assert!("cubic".parse::<Kernel>().is_err());
    }
}

//! 2D convolution with symmetric (edge-repeating) reflection at the borders.
//!
//! Small kernels go through the direct sum; larger ones through an FFT of the
//! reflection-padded plane. Both routes compute the same true convolution
//! `out(x, y) = sum k(dx, dy) * in(x - dx, y - dy)`.

use alloc::vec::Vec;

use crate::fft::{self, Complex64, Direction};
use crate::optics::Psf;
use crate::{Error, Raster, Result};

/// Kernels up to this support use the direct sum.
const DIRECT_MAX_SUPPORT: usize = 9;

/// Maps any integer index onto `0..n` by mirroring with the edge sample repeated
/// (`... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...`).
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Direct-sum convolution of one row-major plane with an odd square kernel.
pub fn convolve_direct(plane: &[f64], width: usize, height: usize, kernel: &[f64], support: usize) -> Vec<f64> {
    debug_assert_eq!(plane.len(), width * height);
    debug_assert_eq!(kernel.len(), support * support);
    let h = (support / 2) as isize;
    let mut out = alloc::vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for ky in 0..support {
                let sy = reflect(y as isize - (ky as isize - h), height);
                let row = &plane[sy * width..(sy + 1) * width];
                let krow = &kernel[ky * support..(ky + 1) * support];
                for (kx, &k) in krow.iter().enumerate() {
                    let sx = reflect(x as isize - (kx as isize - h), width);
                    acc += k * row[sx];
                }
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// FFT convolution of several planes sharing one kernel.
pub fn convolve_fft(planes: &[Vec<f64>], width: usize, height: usize, kernel: &[f64], support: usize) -> Vec<Vec<f64>> {
    let h = support / 2;
    let pw = fft::next_pow2(width + 2 * h);
    let ph = fft::next_pow2(height + 2 * h);

    let mut kspec = alloc::vec![Complex64::new(0.0, 0.0); pw * ph];
    for ky in 0..support {
        for kx in 0..support {
            let dx = (kx as isize - h as isize).rem_euclid(pw as isize) as usize;
            let dy = (ky as isize - h as isize).rem_euclid(ph as isize) as usize;
            kspec[dy * pw + dx] = Complex64::new(kernel[ky * support + kx], 0.0);
        }
    }
    fft::fft2(&mut kspec, pw, ph, Direction::Forward);

    let mut out: Vec<Vec<f64>> = Vec::with_capacity(planes.len());
    // Two real planes per complex transform: the kernel is real, so the real
    // and imaginary parts convolve independently.
    for pair in planes.chunks(2) {
        let mut buf = alloc::vec![Complex64::new(0.0, 0.0); pw * ph];
        for y in 0..height + 2 * h {
            let sy = reflect(y as isize - h as isize, height);
            for x in 0..width + 2 * h {
                let sx = reflect(x as isize - h as isize, width);
                let re = pair[0][sy * width + sx];
                let im = pair.get(1).map_or(0.0, |p| p[sy * width + sx]);
                buf[y * pw + x] = Complex64::new(re, im);
            }
        }
        fft::fft2(&mut buf, pw, ph, Direction::Forward);
        for (b, k) in buf.iter_mut().zip(&kspec) {
            *b *= k;
        }
        fft::fft2(&mut buf, pw, ph, Direction::Inverse);

        let extract = |part: fn(&Complex64) -> f64| {
            let mut plane = Vec::with_capacity(width * height);
            for y in 0..height {
                for x in 0..width {
                    plane.push(part(&buf[(y + h) * pw + x + h]));
                }
            }
            plane
        };
        out.push(extract(|c| c.re));
        if pair.len() == 2 {
            out.push(extract(|c| c.im));
        }
    }
    out
}

/// Convolves every channel of `image` with `psf`.
pub fn blur(image: &Raster, psf: &Psf) -> Result<Raster> {
    let gsd = image.gsd();
    if (psf.pixel_scale - gsd).abs() > 1e-9 * gsd {
        return Err(Error::ScaleMismatch {
            psf: psf.pixel_scale,
            image: gsd,
        });
    }
    convolve(image, &psf.kernel, psf.support)
}

/// Convolves every channel of `image` with an odd square `kernel`.
pub fn convolve(image: &Raster, kernel: &[f64], support: usize) -> Result<Raster> {
    if support.is_multiple_of(2) || kernel.len() != support * support {
        return Err(Error::param(
            "kernel",
            alloc::format!("{} taps do not form an odd square of side {support}", kernel.len()),
        ));
    }
    let (w, h) = (image.width(), image.height());
    let planes = image.planes();
    let filtered: Vec<Vec<f64>> = if support <= DIRECT_MAX_SUPPORT {
        planes
            .iter()
            .map(|p| convolve_direct(p, w, h, kernel, support))
            .collect()
    } else {
        convolve_fft(&planes, w, h, kernel, support)
    };
    Raster::from_planes(w, h, &filtered, image.gsd())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent quadruple loop: explicit mirrored padding, then a plain sum.
    fn brute_force(plane: &[f64], w: usize, h: usize, kernel: &[f64], s: usize) -> Vec<f64> {
        let r = s / 2;
        let pw = w + 2 * r;
        let mut padded = vec![0.0; pw * (h + 2 * r)];
        for py in 0..h + 2 * r {
            for px in 0..pw {
                let mut sx = px as isize - r as isize;
                let mut sy = py as isize - r as isize;
                while sx < 0 || sx >= w as isize {
                    sx = if sx < 0 { -sx - 1 } else { 2 * w as isize - sx - 1 };
                }
                while sy < 0 || sy >= h as isize {
                    sy = if sy < 0 { -sy - 1 } else { 2 * h as isize - sy - 1 };
                }
                padded[py * pw + px] = plane[sy as usize * w + sx as usize];
            }
        }
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for j in 0..s {
                    for i in 0..s {
                        // flipped kernel: tap (i, j) multiplies in(x - (i - r), y - (j - r))
                        acc += kernel[j * s + i] * padded[(y + 2 * r - j) * pw + (x + 2 * r - i)];
                    }
                }
                out[y * w + x] = acc;
            }
        }
        out
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-4..8).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(reflect(-7, 1), 0);
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = Raster::new(9, 7, 3, random_vec(9 * 7 * 3, &mut rng), 1.0).unwrap();
        let out = blur(&img, &Psf::delta(1.0)).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn scale_mismatch_rejected() {
        let img = Raster::filled(4, 4, 1, 0.5, 1.0).unwrap();
        assert!(matches!(blur(&img, &Psf::delta(0.5)), Err(Error::ScaleMismatch { .. })));
    }

    #[test]
    fn direct_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let plane = random_vec(16 * 16, &mut rng);
        let kernel = random_vec(25, &mut rng);
        let a = convolve_direct(&plane, 16, 16, &kernel, 5);
        let b = brute_force(&plane, 16, 16, &kernel, 5);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn fft_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (w, h, s) in [(32, 32, 9), (13, 21, 7), (5, 3, 11), (1, 1, 3)] {
            let planes = vec![
                random_vec(w * h, &mut rng),
                random_vec(w * h, &mut rng),
                random_vec(w * h, &mut rng),
            ];
            let kernel = random_vec(s * s, &mut rng);
            let fast = convolve_fft(&planes, w, h, &kernel, s);
            for (p, f) in planes.iter().zip(&fast) {
                let slow = brute_force(p, w, h, &kernel, s);
                for (x, y) in f.iter().zip(&slow) {
                    assert!((x - y).abs() < 1e-9, "{w}x{h} k{s}");
                }
            }
        }
    }

    #[test]
    fn constant_image_unchanged() {
        let img = Raster::filled(20, 12, 3, 0.37, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for s in [3, 15] {
            let mut k = random_vec(s * s, &mut rng);
            let sum: f64 = k.iter().sum();
            k.iter_mut().for_each(|v| *v /= sum);
            let out = convolve(&img, &k, s).unwrap();
            assert!(out.data().iter().all(|v| (v - 0.37).abs() < 1e-6));
        }
    }

    #[test]
    fn symmetric_kernel_preserves_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = Raster::new(24, 18, 1, random_vec(24 * 18, &mut rng), 1.0).unwrap();
        // Separable binomial kernel: mirror-symmetric along both axes.
        let taps = [1.0, 4.0, 6.0, 4.0, 1.0];
        let k: Vec<f64> = taps
            .iter()
            .flat_map(|a| taps.iter().map(move |b| a * b / 256.0))
            .collect();
        let out = convolve(&img, &k, 5).unwrap();
        assert!((out.mean() - img.mean()).abs() < 1e-6);
    }
}

//! SNR50-calibrated Poisson shot noise.
//!
//! A pixel at digital number `v = I (2^bit - 1)` collects on average
//! `mu = v W / 2^bit` photoelectrons, with the equivalent well capacity
//! `W = 2 SNR50^2`. At half dynamic range `mu = SNR50^2` and the Poisson
//! signal-to-noise `sqrt(mu)` equals SNR50 by construction.
//!
//! Counts are mapped back to intensities with the exact inverse of the
//! forward map, so the expected brightness is unchanged.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::raster::BitDepth;
use crate::{Error, Raster, Result};

/// Means at or above this use the rounded normal approximation.
pub const EXACT_POISSON_LIMIT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotNoise {
    snr50: f64,
    bit: BitDepth,
}

impl ShotNoise {
    pub fn new(snr50: f64, bit: BitDepth) -> Result<Self> {
        if !(snr50 > 0.0 && snr50.is_finite()) {
            return Err(Error::param("snr50", alloc::format!("{snr50} (must be > 0)")));
        }
        Ok(ShotNoise { snr50, bit })
    }

    pub fn snr50(&self) -> f64 {
        self.snr50
    }

    /// `W = 2 SNR50^2`
    pub fn well_capacity(&self) -> f64 {
        well_capacity(self.snr50)
    }

    /// Expected count per unit intensity: `(2^bit - 1) W / 2^bit`.
    pub fn gain(&self) -> f64 {
        f64::from(self.bit.max_value()) * self.well_capacity() / self.bit.levels()
    }

    pub fn mean_count(&self, intensity: f64) -> f64 {
        intensity * self.gain()
    }

    /// One Poisson draw per sample, in photoelectron counts.
    pub fn counts(&self, image: &Raster, seed: u64) -> Result<Vec<f64>> {
        if let Some((index, &value)) = image.data().iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::IntensityOutOfRange { index, value });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gain = self.gain();
        Ok(image
            .data()
            .iter()
            .map(|&v| sample_poisson(&mut rng, v * gain))
            .collect())
    }

    /// Counts back to intensities, clamped to `[0, 1]`.
    pub fn normalize(&self, counts: &[f64]) -> Vec<f64> {
        let gain = self.gain();
        counts.iter().map(|&k| (k / gain).clamp(0.0, 1.0)).collect()
    }
}

pub fn well_capacity(snr50: f64) -> f64 {
    2.0 * snr50 * snr50
}

/// Knuth's multiplication method below [`EXACT_POISSON_LIMIT`], otherwise
/// `round(N(mu, mu))` clamped at zero.
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mu: f64) -> f64 {
    if mu <= 0.0 {
        return 0.0;
    }
    if mu < EXACT_POISSON_LIMIT {
        let limit = libm::exp(-mu);
        let mut product = 1.0;
        let mut k = 0u32;
        loop {
            product *= rng.random::<f64>();
            if product <= limit {
                return f64::from(k);
            }
            k += 1;
        }
    }
    let z: f64 = rng.sample(StandardNormal);
    libm::round(mu + libm::sqrt(mu) * z).max(0.0)
}

/// Applies shot noise to every sample of `image`; deterministic in `seed`.
pub fn shot_noise(image: &Raster, snr50: f64, bit: BitDepth, seed: u64) -> Result<Raster> {
    let model = ShotNoise::new(snr50, bit)?;
    let counts = model.counts(image, seed)?;
    Ok(image.with_data(model.normalize(&counts)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_std(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, libm::sqrt(var))
    }

    #[test]
    fn poisson_mean_from_digital_number() {
        let model = ShotNoise::new(10.0, BitDepth::Eight).unwrap();
        assert_eq!(model.well_capacity(), 200.0);
        assert!((model.mean_count(128.0 / 255.0) - 100.0).abs() < 1e-12);
        assert_eq!(well_capacity(50.0), 5000.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ShotNoise::new(0.0, BitDepth::Eight).is_err());
        let img = Raster::new(1, 1, 1, alloc::vec![1.5], 1.0).unwrap();
        assert!(shot_noise(&img, 10.0, BitDepth::Eight, 0).is_err());
    }

    #[test]
    fn zero_mean_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_poisson(&mut rng, 0.0), 0.0);
        let img = Raster::filled(4, 4, 1, 0.0, 1.0).unwrap();
        let out = shot_noise(&img, 10.0, BitDepth::Eight, 3).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn small_mean_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for mu in [0.5, 4.0, 25.0] {
            let draws: Vec<f64> = (0..200_000).map(|_| sample_poisson(&mut rng, mu)).collect();
            let (m, s) = mean_std(&draws);
            assert!((m - mu).abs() < 5.0 * libm::sqrt(mu / 200_000.0), "mu={mu} mean={m}");
            assert!((s * s / mu - 1.0).abs() < 0.02, "mu={mu} var={}", s * s);
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let img = Raster::filled(8, 8, 3, 0.3, 1.0).unwrap();
        let a = shot_noise(&img, 20.0, BitDepth::Eight, 42).unwrap();
        let b = shot_noise(&img, 20.0, BitDepth::Eight, 42).unwrap();
        let c = shot_noise(&img, 20.0, BitDepth::Eight, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn half_range_calibration() {
        let n = 1_000_000;
        for snr50 in [10.0, 50.0, 100.0] {
            let img = Raster::filled(1000, n / 1000, 1, 0.5, 1.0).unwrap();
            let out = shot_noise(&img, snr50, BitDepth::Eight, 7).unwrap();
            let (mean, std) = mean_std(out.data());
            assert!(
                ((mean / std) / snr50 - 1.0).abs() < 0.01,
                "snr50={snr50}: {}",
                mean / std
            );
            // Mean preserved within 3 sigma of the sample-mean spread.
            let sigma = 0.5 / snr50 / libm::sqrt(n as f64);
            assert!((mean - 0.5).abs() < 3.0 * sigma, "snr50={snr50}: mean {mean}");
        }
    }
}

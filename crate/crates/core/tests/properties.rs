use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tradescope_core::degrade::{self, DegradeSpec};
use tradescope_core::edsr::{self, ConvLayer, FeatureMap, LayerShape};
use tradescope_core::filter;
use tradescope_core::metrics;
use tradescope_core::optics::{self, OpticsSpec};
use tradescope_core::resample::{self, Kernel};
use tradescope_core::Raster;

fn image(w: usize, h: usize, c: usize, seed: u64) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Raster::new(w, h, c, (0..w * h * c).map(|_| rng.random()).collect(), 0.6).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn aperture_round_trip(d in 0.05f64..=1.0) {
        let spec = OpticsSpec { aperture_diameter: d, ..OpticsSpec::default() };
        let grd = optics::grd_from_aperture(&spec);
        let back = optics::aperture_from_grd(grd, spec.wavelength, spec.altitude).unwrap();
        prop_assert!((back - d).abs() / d <= 1e-12);
    }

    #[test]
    fn psf_is_unit_sum_and_centrosymmetric(grd in 1.2f64..3.0, gsd in 0.3f64..0.6) {
        let psf = optics::psf_for_grd(grd, &OpticsSpec::default(), gsd).unwrap();
        prop_assert!(psf.support % 2 == 1);
        prop_assert!((psf.sum() - 1.0).abs() < 1e-9);
        prop_assert!(psf.asymmetry() < 1e-12);
        prop_assert!(psf.kernel.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn blur_preserves_mean(w in 4usize..40, h in 4usize..40, grd in 1.2f64..2.6, seed in any::<u64>()) {
        let img = image(w, h, 3, seed);
        let psf = optics::psf_for_grd(grd, &OpticsSpec::default(), 0.6).unwrap();
        let out = filter::blur(&img, &psf).unwrap();
        prop_assert!((out.mean() - img.mean()).abs() < 1e-6);
    }

    #[test]
    fn area_average_preserves_mean(k in 1usize..8, factor in 2usize..5, seed in any::<u64>()) {
        let n = k * factor;
        let img = image(n, n + factor, 1, seed);
        let out = resample::resample(&img, 0.6 * factor as f64, Kernel::AreaAverage).unwrap();
        prop_assert!((out.mean() - img.mean()).abs() < 1e-6);
    }

    #[test]
    fn classical_upscale_keeps_constants(v in 0.0f64..=1.0, scale in 2usize..5, w in 1usize..12, h in 1usize..12) {
        let img = Raster::filled(w, h, 3, v, 1.0).unwrap();
        for kernel in [Kernel::Nearest, Kernel::Bilinear, Kernel::Bicubic, Kernel::Lanczos3] {
            let out = resample::upscale(&img, scale, kernel).unwrap();
            prop_assert_eq!((out.width(), out.height()), (w * scale, h * scale));
            prop_assert!(out.data().iter().all(|x| (x - v).abs() <= 1e-12));
        }
    }

    #[test]
    fn degrade_is_deterministic_and_bounded(seed in any::<u64>(), snr in 5.0f64..120.0, grd in 1.2f64..2.6) {
        let img = image(24, 24, 3, seed ^ 0x55);
        let spec = DegradeSpec::new(0.6, 1.2, grd, snr, seed);
        let optics = OpticsSpec::default();
        let a = degrade::degrade(&img, &spec, &optics).unwrap();
        let b = degrade::degrade(&img, &spec, &optics).unwrap();
        prop_assert_eq!(a.raster.data(), b.raster.data());
        prop_assert_eq!(a.stage_log, b.stage_log);
        prop_assert!(a.raster.is_unit_range());
        prop_assert_eq!((a.raster.width(), a.raster.gsd()), (12, 1.2));
    }

    #[test]
    fn psnr_consistent_with_mse(seed in any::<u64>()) {
        let a = image(16, 12, 3, seed);
        let b = image(16, 12, 3, seed.wrapping_add(1));
        let mse = metrics::mse(&a, &b).unwrap();
        let psnr = metrics::psnr(&a, &b, 1.0).unwrap();
        prop_assert!((psnr - 10.0 * (1.0 / mse).log10()).abs() <= 1e-9);
    }

    #[test]
    fn ssim_bounded(seed in any::<u64>(), invert in any::<bool>()) {
        let a = image(16, 16, 1, seed);
        let b = if invert {
            Raster::new(16, 16, 1, a.data().iter().map(|v| 1.0 - v).collect(), 0.6).unwrap()
        } else {
            image(16, 16, 1, !seed)
        };
        for s in [metrics::ssim_global(&a, &b).unwrap(), metrics::ssim_windowed(&a, &b).unwrap()] {
            prop_assert!((-1.0..=1.0).contains(&s));
        }
        prop_assert_eq!(metrics::ssim_global(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn crops_compose(x1 in 0usize..6, y1 in 0usize..6, x2 in 0usize..4, y2 in 0usize..4, w in 1usize..5, h in 1usize..5) {
        let img = image(16, 16, 3, 9);
        let outer = img.crop_region(x1, y1, w + x2, h + y2).unwrap();
        let nested = outer.crop_region(x2, y2, w, h).unwrap();
        prop_assert_eq!(nested, img.crop_region(x1 + x2, y1 + y2, w, h).unwrap());
        prop_assert_eq!(img.crop_region(0, 0, 16, 16).unwrap(), img);
    }

    #[test]
    fn shuffle_is_a_bijection(r in 2usize..4, w in 1usize..7, h in 1usize..7, c in 1usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = c * r * r;
        let map = FeatureMap::new(w, h, ch, (0..w * h * ch).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap();
        let up = edsr::pixel_shuffle(&map, r).unwrap();
        prop_assert_eq!((up.width, up.height, up.channels), (w * r, h * r, c));
        prop_assert_eq!(edsr::pixel_unshuffle(&up, r).unwrap(), map.clone());
        let mut a = map.data.clone();
        let mut b = up.data.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn zero_residual_is_identity(w in 1usize..9, h in 1usize..9, f in 1usize..6, scaling in -2.0f32..2.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = FeatureMap::new(w, h, f, (0..w * h * f).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect()).unwrap();
        let zero = ConvLayer::zeros("z", LayerShape { out_channels: f, in_channels: f, kernel: 3 });
        prop_assert_eq!(edsr::residual_block(&map, &zero, &zero, scaling).unwrap(), map);
    }
}

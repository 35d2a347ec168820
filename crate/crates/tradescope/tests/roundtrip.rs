use proptest::prelude::*;
use tradescope::core::raster::BitDepth;
use tradescope::core::sweep::{RunMetrics, RunRecord, RunStatus, TradeSpacePoint};
use tradescope::core::{Geography, Raster};
use tradescope::io::{load_raster, load_raster_full, save_raster};
use tradescope::report;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn png_round_trip_error_is_half_a_step(
        values in prop::collection::vec(0.0f64..=1.0, 1..60),
        rgb in any::<bool>(),
        sixteen in any::<bool>(),
        gsd in 0.05f64..10.0,
    ) {
        let c = if rgb { 3 } else { 1 };
        let n = values.len() * c;
        let data: Vec<f64> = values.iter().cycle().take(n).copied().collect();
        let img = Raster::new(values.len(), 1, c, data, gsd).unwrap();
        let bit = if sixteen { BitDepth::Sixteen } else { BitDepth::Eight };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        save_raster(&img, &path, bit).unwrap();
        let back = load_raster_full(&path).unwrap();
        prop_assert_eq!(back.bit, bit);
        prop_assert!(back.tagged_gsd);
        prop_assert_eq!(back.raster.gsd(), gsd);
        let step = 0.5 / f64::from(bit.max_value());
        for (a, b) in img.data().iter().zip(back.raster.data()) {
            prop_assert!((a - b).abs() <= step + 1e-15);
            prop_assert!((0.0..=1.0).contains(b));
        }
        // Saving what was loaded is lossless.
        save_raster(&back.raster, &path, bit).unwrap();
        prop_assert_eq!(load_raster(&path).unwrap(), back.raster);
    }

    #[test]
    fn float_text_keeps_nine_digits(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let back = report::parse_float(&report::fmt_float(x)).unwrap();
        prop_assert!((back - x).abs() <= 5e-9 * x.abs());
    }

    #[test]
    fn record_csv_round_trip(
        mse in 0.0f64..1.0,
        ssim in -1.0f64..=1.0,
        seed in any::<u64>(),
        ok in any::<bool>(),
    ) {
        let point = TradeSpacePoint { gsd_product: 1.8, grd: 2.25, snr50: 70.0 };
        let record = RunRecord {
            geography: Geography::RuralUrban,
            crop_id: 3,
            point,
            scale: if ok { 3 } else { 0 },
            backend: "bicubic".into(),
            metrics: ok.then(|| RunMetrics {
                mse,
                psnr_db: 10.0 * (1.0 / mse).log10(),
                ssim_global: ssim,
                ssim_win11: Some(ssim / 2.0),
            }),
            status: if ok { RunStatus::Ok } else { RunStatus::Failed("adapter, \"quoted\"".into()) },
            seed,
        };
        let mut text = Vec::new();
        report::records_to_writer(std::slice::from_ref(&record), &mut text).unwrap();
        let back = report::records_from_reader(text.as_slice()).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(back[0].seed, seed);
        prop_assert_eq!(&back[0].status, &record.status);
        let mut again = Vec::new();
        report::records_to_writer(&back, &mut again).unwrap();
        prop_assert_eq!(again, text);
    }
}

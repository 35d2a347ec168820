//! Box statistics, GSD × GRD heatmaps and the derived trend checks.
//!
//! Quartiles use linear interpolation between order statistics (type 7):
//! for sorted `x` of length `n` the `p`-quantile sits at `h = (n - 1) p`.
//! The median of an even-length group is the mean of the central pair.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::raster::Geography;
use crate::sweep::{RunMetrics, RunRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn interpolate(lo: f64, hi: f64, frac: f64) -> f64 {
    if frac == 0.0 || lo == hi {
        return lo;
    }
    (lo + frac * (hi - lo)).clamp(lo, hi)
}

/// Type-7 quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    interpolate(sorted[lo], sorted[lo + 1], h - lo as f64)
}

impl BoxStats {
    /// Errors on an empty slice or a NaN.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGroup);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite("box statistics input".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            let (a, b) = (sorted[n / 2 - 1], sorted[n / 2]);
            if a == b {
                a
            } else {
                ((a + b) / 2.0).clamp(a, b)
            }
        };
        Ok(BoxStats {
            n,
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median,
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[n - 1],
        })
    }

    pub fn is_ordered(&self) -> bool {
        self.min <= self.q1 && self.q1 <= self.median && self.median <= self.q3 && self.q3 <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Mse,
    Psnr,
    SsimGlobal,
    SsimWindowed,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Mse, Metric::Psnr, Metric::SsimGlobal, Metric::SsimWindowed];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Psnr => "psnr_db",
            Metric::SsimGlobal => "ssim_global",
            Metric::SsimWindowed => "ssim_win11",
        }
    }

    pub fn of(self, m: &RunMetrics) -> Option<f64> {
        match self {
            Metric::Mse => Some(m.mse),
            Metric::Psnr => Some(m.psnr_db),
            Metric::SsimGlobal => Some(m.ssim_global),
            Metric::SsimWindowed => m.ssim_win11,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(Metric::Mse),
            "psnr" | "psnr_db" => Ok(Metric::Psnr),
            "ssim" | "ssim_global" => Ok(Metric::SsimGlobal),
            "ssim_win11" | "ssim_windowed" => Ok(Metric::SsimWindowed),
            other => Err(Error::param("metric", alloc::format!("unknown metric `{other}`"))),
        }
    }
}

/// Which record fields form the group key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupBy {
    /// Geography × product GSD over every GRD and SNR50.
    GeographyGsd,
    /// Geography × crop over every point.
    GeographyCrop,
    /// GSD × GRD × SNR50 over every crop.
    CellSnr,
    /// Product GSD alone.
    Gsd,
}

impl GroupBy {
    pub const ALL: [GroupBy; 4] = [
        GroupBy::GeographyGsd,
        GroupBy::GeographyCrop,
        GroupBy::CellSnr,
        GroupBy::Gsd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GroupBy::GeographyGsd => "geography_gsd",
            GroupBy::GeographyCrop => "geography_crop",
            GroupBy::CellSnr => "cell_snr",
            GroupBy::Gsd => "gsd",
        }
    }

    pub fn key(self, r: &RunRecord) -> GroupKey {
        let mut k = GroupKey::default();
        match self {
            GroupBy::GeographyGsd => {
                k.geography = Some(r.geography);
                k.gsd = Some(r.point.gsd_product);
            }
            GroupBy::GeographyCrop => {
                k.geography = Some(r.geography);
                k.crop_id = Some(r.crop_id);
            }
            GroupBy::CellSnr => {
                k.gsd = Some(r.point.gsd_product);
                k.grd = Some(r.point.grd);
                k.snr50 = Some(r.point.snr50);
            }
            GroupBy::Gsd => k.gsd = Some(r.point.gsd_product),
        }
        k
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GroupBy::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::param("group_by", alloc::format!("unknown grouping `{s}`")))
    }
}

/// Unused fields are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupKey {
    pub geography: Option<Geography>,
    pub crop_id: Option<u32>,
    pub gsd: Option<f64>,
    pub grd: Option<f64>,
    pub snr50: Option<f64>,
}

fn cmp_opt_f64(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        _ => a.is_some().cmp(&b.is_some()),
    }
}

impl GroupKey {
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.geography
            .cmp(&other.geography)
            .then(self.crop_id.cmp(&other.crop_id))
            .then(cmp_opt_f64(self.gsd, other.gsd))
            .then(cmp_opt_f64(self.grd, other.grd))
            .then(cmp_opt_f64(self.snr50, other.snr50))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateStats {
    pub group_by: GroupBy,
    pub key: GroupKey,
    pub metric: Metric,
    pub stats: BoxStats,
}

/// Box statistics of `metric` per group over successful records, in key order.
pub fn aggregate_boxstats(records: &[RunRecord], group_by: GroupBy, metric: Metric) -> Result<Vec<AggregateStats>> {
    let mut keyed: Vec<(GroupKey, f64)> = records
        .iter()
        .filter(|r| r.status.is_ok())
        .filter_map(|r| {
            r.metrics
                .as_ref()
                .and_then(|m| metric.of(m))
                .map(|v| (group_by.key(r), v))
        })
        .collect();
    if keyed.is_empty() {
        return Err(Error::EmptyGroup);
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut start = 0;
    while start < keyed.len() {
        let key = keyed[start].0;
        let end = start
            + keyed[start..]
                .iter()
                .take_while(|(k, _)| k.total_cmp(&key) == Ordering::Equal)
                .count();
        let values: Vec<f64> = keyed[start..end].iter().map(|(_, v)| *v).collect();
        out.push(AggregateStats {
            group_by,
            key,
            metric,
            stats: BoxStats::from_values(&values)?,
        });
        start = end;
    }
    Ok(out)
}

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Per-cell statistics of one metric at one SNR50, rows by GSD and columns by GRD.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub metric: Metric,
    pub snr50: f64,
    pub gsd_values: Vec<f64>,
    pub grd_values: Vec<f64>,
    /// Row-major; `None` marks a cell with no successful record.
    pub cells: Vec<Option<BoxStats>>,
}

impl Heatmap {
    pub fn cell(&self, gsd_index: usize, grd_index: usize) -> Option<&BoxStats> {
        self.cells[gsd_index * self.grd_values.len() + grd_index].as_ref()
    }

    pub fn median(&self, gsd_index: usize, grd_index: usize) -> Option<f64> {
        self.cell(gsd_index, grd_index).map(|s| s.median)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.gsd_values.len(), self.grd_values.len())
    }
}

pub fn heatmap_table(
    records: &[RunRecord],
    metric: Metric,
    snr50: f64,
    gsd_values: &[f64],
    grd_values: &[f64],
) -> Result<Heatmap> {
    let slice: Vec<&RunRecord> = records
        .iter()
        .filter(|r| r.status.is_ok() && same_value(r.point.snr50, snr50))
        .collect();
    if slice.is_empty() {
        return Err(Error::MissingSlice(snr50));
    }
    let mut cells = Vec::with_capacity(gsd_values.len() * grd_values.len());
    for &gsd in gsd_values {
        for &grd in grd_values {
            let values: Vec<f64> = slice
                .iter()
                .filter(|r| same_value(r.point.gsd_product, gsd) && same_value(r.point.grd, grd))
                .filter_map(|r| r.metrics.as_ref().and_then(|m| metric.of(m)))
                .collect();
            cells.push(if values.is_empty() {
                None
            } else {
                Some(BoxStats::from_values(&values)?)
            });
        }
    }
    Ok(Heatmap {
        metric,
        snr50,
        gsd_values: gsd_values.to_vec(),
        grd_values: grd_values.to_vec(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauCell {
    pub gsd: f64,
    pub grd: f64,
    /// `median(mid) - median(low)`
    pub delta1: Option<f64>,
    /// `median(high) - median(mid)`
    pub delta2: Option<f64>,
}

impl PlateauCell {
    /// `Some(true)` when the first step gains more than the second.
    pub fn saturates(&self) -> Option<bool> {
        Some(self.delta1? > self.delta2?)
    }
}

/// Gains between three SNR50 slices, per cell.
pub fn plateau_table(low: &Heatmap, mid: &Heatmap, high: &Heatmap) -> Result<Vec<PlateauCell>> {
    if low.dims() != mid.dims() || mid.dims() != high.dims() {
        return Err(Error::DimensionMismatch("heatmaps cover different grids".into()));
    }
    let (rows, cols) = low.dims();
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let (a, b, c) = (low.median(i, j), mid.median(i, j), high.median(i, j));
            out.push(PlateauCell {
                gsd: low.gsd_values[i],
                grd: low.grd_values[j],
                delta1: a.zip(b).map(|(a, b)| b - a),
                delta2: b.zip(c).map(|(b, c)| c - b),
            });
        }
    }
    Ok(out)
}

/// Fraction of cells that saturate; cells with missing data count as failures.
pub fn plateau_fraction(cells: &[PlateauCell]) -> f64 {
    if cells.is_empty() {
        return 0.0;
    }
    cells.iter().filter(|c| c.saturates() == Some(true)).count() as f64 / cells.len() as f64
}

/// One GSD row of one heatmap, checked for medians that never rise with GRD.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneLine {
    pub snr50: f64,
    pub gsd: f64,
    pub medians: Vec<Option<f64>>,
    pub non_increasing: bool,
}

pub fn monotone_lines(heatmaps: &[Heatmap]) -> Vec<MonotoneLine> {
    let mut out = Vec::new();
    for h in heatmaps {
        let (rows, cols) = h.dims();
        for i in 0..rows {
            let medians: Vec<Option<f64>> = (0..cols).map(|j| h.median(i, j)).collect();
            let non_increasing =
                medians.iter().all(Option::is_some) && medians.windows(2).all(|w| w[1].unwrap() <= w[0].unwrap());
            out.push(MonotoneLine {
                snr50: h.snr50,
                gsd: h.gsd_values[i],
                medians,
                non_increasing,
            });
        }
    }
    out
}

pub fn monotone_fraction(lines: &[MonotoneLine]) -> f64 {
    if lines.is_empty() {
        return 0.0;
    }
    lines.iter().filter(|l| l.non_increasing).count() as f64 / lines.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{RunStatus, TradeSpacePoint};
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn record(geo: Geography, crop: u32, gsd: f64, grd: f64, snr: f64, ssim: f64) -> RunRecord {
        RunRecord {
            geography: geo,
            crop_id: crop,
            point: TradeSpacePoint {
                gsd_product: gsd,
                grd,
                snr50: snr,
            },
            scale: 2,
            backend: "bicubic".to_string(),
            metrics: Some(RunMetrics {
                mse: 1.0 - ssim,
                psnr_db: 20.0,
                ssim_global: ssim,
                ssim_win11: Some(ssim),
            }),
            status: RunStatus::Ok,
            seed: 0,
        }
    }

    #[test]
    fn three_values() {
        let s = BoxStats::from_values(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max, s.n), (1.0, 1.5, 2.0, 2.5, 3.0, 3));
    }

    #[test]
    fn single_value() {
        let s = BoxStats::from_values(&[0.7]).unwrap();
        assert_eq!([s.min, s.q1, s.median, s.q3, s.max], [0.7; 5]);
    }

    #[test]
    fn even_median_and_errors() {
        let s = BoxStats::from_values(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
        assert_eq!(BoxStats::from_values(&[]), Err(Error::EmptyGroup));
        assert!(BoxStats::from_values(&[f64::NAN]).is_err());
        let inf = BoxStats::from_values(&[1.0, f64::INFINITY]).unwrap();
        assert_eq!(inf.median, f64::INFINITY);
        assert!(inf.is_ordered());
    }

    #[test]
    fn groups_exclude_failures() {
        let mut records = vec![
            record(Geography::Beach, 1, 1.2, 1.2, 10.0, 0.5),
            record(Geography::Beach, 1, 1.2, 1.2, 20.0, 0.7),
            record(Geography::Beach, 1, 1.8, 1.2, 10.0, 0.4),
            record(Geography::Urban, 1, 1.2, 1.2, 10.0, 0.2),
        ];
        let mut failed = record(Geography::Beach, 2, 1.2, 1.2, 30.0, 0.0);
        failed.status = RunStatus::Failed("boom".into());
        failed.metrics = None;
        records.push(failed);
        let g = aggregate_boxstats(&records, GroupBy::GeographyGsd, Metric::SsimGlobal).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g[0].key.geography, Some(Geography::Beach));
        assert_eq!(g[0].key.gsd, Some(1.2));
        assert_eq!(g[0].stats.n, 2);
        assert!((g[0].stats.median - 0.6).abs() < 1e-15);
        assert_eq!(g[2].key.geography, Some(Geography::Urban));
        assert_eq!(
            aggregate_boxstats(&[], GroupBy::Gsd, Metric::Mse),
            Err(Error::EmptyGroup)
        );
    }

    #[test]
    fn heatmap_cells_and_missing_slice() {
        let records = vec![
            record(Geography::Beach, 1, 1.2, 1.2, 10.0, 0.9),
            record(Geography::Beach, 1, 1.2, 1.55, 10.0, 0.8),
            record(Geography::Beach, 1, 1.8, 1.2, 10.0, 0.7),
        ];
        let h = heatmap_table(&records, Metric::SsimGlobal, 10.0, &[1.2, 1.8], &[1.2, 1.55]).unwrap();
        assert_eq!(h.dims(), (2, 2));
        assert_eq!(h.median(0, 0), Some(0.9));
        assert_eq!(h.median(0, 1), Some(0.8));
        assert_eq!(h.median(1, 0), Some(0.7));
        assert_eq!(h.median(1, 1), None);
        assert_eq!(
            heatmap_table(&records, Metric::SsimGlobal, 50.0, &[1.2], &[1.2]),
            Err(Error::MissingSlice(50.0))
        );
    }

    #[test]
    fn plateau_and_monotone() {
        let mut records = vec![];
        for (snr, base) in [(10.0, 0.3), (50.0, 0.6), (100.0, 0.65)] {
            for (j, grd) in [1.2, 1.55].into_iter().enumerate() {
                records.push(record(Geography::Forest, 1, 1.2, grd, snr, base - 0.1 * j as f64));
            }
        }
        let maps: Vec<Heatmap> = [10.0, 50.0, 100.0]
            .iter()
            .map(|&s| heatmap_table(&records, Metric::SsimGlobal, s, &[1.2], &[1.2, 1.55]).unwrap())
            .collect();
        let cells = plateau_table(&maps[0], &maps[1], &maps[2]).unwrap();
        assert_eq!(cells.len(), 2);
        assert!((cells[0].delta1.unwrap() - 0.3).abs() < 1e-12);
        assert!((cells[0].delta2.unwrap() - 0.05).abs() < 1e-12);
        assert_eq!(plateau_fraction(&cells), 1.0);
        let lines = monotone_lines(&maps);
        assert_eq!(lines.len(), 3);
        assert_eq!(monotone_fraction(&lines), 1.0);
    }

    #[test]
    fn parse_names() {
        for m in Metric::ALL {
            assert_eq!(m.as_str().parse::<Metric>().unwrap(), m);
        }
        for g in GroupBy::ALL {
            assert_eq!(g.as_str().parse::<GroupBy>().unwrap(), g);
        }
        assert!("nope".parse::<Metric>().is_err());
    }

    proptest! {
        #[test]
        fn ordered(values in proptest::collection::vec(-1e6f64..1e6, 1..200)) {
            let s = BoxStats::from_values(&values).unwrap();
            prop_assert!(s.is_ordered());
            prop_assert_eq!(s.n, values.len());
        }
    }
}

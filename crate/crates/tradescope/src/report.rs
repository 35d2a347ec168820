//! CSV tables and the plain-text summary.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use tradescope_core::raster::Geography;
use tradescope_core::stats::{self, AggregateStats, BoxStats, GroupBy, Heatmap, Metric, MonotoneLine, PlateauCell};
use tradescope_core::sweep::{RunMetrics, RunRecord, RunStatus, TradeSpacePoint};

use crate::error::{AppError, Result};

pub const RECORD_COLUMNS: [&str; 13] = [
    "geography",
    "crop_id",
    "gsd_product",
    "grd",
    "snr50",
    "scale",
    "backend",
    "mse",
    "psnr_db",
    "ssim_global",
    "ssim_win11",
    "status",
    "seed",
];

pub const BOXSTAT_COLUMNS: [&str; 13] = [
    "group_by",
    "metric",
    "geography",
    "crop_id",
    "gsd",
    "grd",
    "snr50",
    "n",
    "min",
    "q1",
    "median",
    "q3",
    "max",
];

pub const HEATMAP_COLUMNS: [&str; 10] = ["metric", "snr50", "gsd", "grd", "n", "min", "q1", "median", "q3", "max"];

pub const PLATEAU_COLUMNS: [&str; 5] = ["gsd", "grd", "delta1", "delta2", "saturates"];

/// Nine significant digits in `%g` style; `inf`, `-inf` and `nan` spelled out.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let fixed = format!("{:.*}", (8 - exp) as usize, v);
        trim_zeros(&fixed).to_owned()
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn parse_float(s: &str) -> std::result::Result<f64, String> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => s.parse().map_err(|_| format!("bad number `{s}`")),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn write_rows(out: impl Write, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| AppError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> AppError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AppError::io(path, io),
        other => AppError::format(path, format!("{other:?}")),
    }
}

fn record_row(r: &RunRecord) -> Vec<String> {
    let m = r.metrics.as_ref();
    vec![
        r.geography.to_string(),
        r.crop_id.to_string(),
        fmt_float(r.point.gsd_product),
        fmt_float(r.point.grd),
        fmt_float(r.point.snr50),
        r.scale.to_string(),
        r.backend.clone(),
        opt(m.map(|m| m.mse)),
        opt(m.map(|m| m.psnr_db)),
        opt(m.map(|m| m.ssim_global)),
        opt(m.and_then(|m| m.ssim_win11)),
        r.status.to_string(),
        r.seed.to_string(),
    ]
}

/// Records sorted canonically; identical inputs give identical bytes.
pub fn records_to_writer(records: &[RunRecord], out: impl Write) -> csv::Result<()> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.canonical_cmp(b));
    write_rows(out, &RECORD_COLUMNS, sorted.into_iter().map(record_row))
}

pub fn export_records(records: &[RunRecord], path: &Path) -> Result<()> {
    records_to_writer(records, create(path)?).map_err(|e| csv_err(path, e))
}

fn field(row: &csv::StringRecord, i: usize) -> &str {
    row.get(i).unwrap_or("")
}

fn parse_row(row: &csv::StringRecord) -> std::result::Result<RunRecord, String> {
    let num = |i: usize| parse_float(field(row, i));
    let opt_num = |i: usize| match field(row, i) {
        "" => Ok(None),
        s => parse_float(s).map(Some),
    };
    let int = |i: usize| {
        field(row, i)
            .parse::<u64>()
            .map_err(|_| format!("bad integer `{}`", field(row, i)))
    };
    let status = match field(row, 11) {
        "ok" => RunStatus::Ok,
        s => RunStatus::Failed(
            s.strip_prefix("failed: ")
                .ok_or_else(|| format!("bad status `{s}`"))?
                .to_owned(),
        ),
    };
    let metrics = match (opt_num(7)?, opt_num(8)?, opt_num(9)?) {
        (Some(mse), Some(psnr_db), Some(ssim_global)) => Some(RunMetrics {
            mse,
            psnr_db,
            ssim_global,
            ssim_win11: opt_num(10)?,
        }),
        (None, None, None) => None,
        _ => return Err("partial metrics".into()),
    };
    Ok(RunRecord {
        geography: field(row, 0).parse::<Geography>().map_err(|e| e.to_string())?,
        crop_id: int(1)? as u32,
        point: TradeSpacePoint {
            gsd_product: num(2)?,
            grd: num(3)?,
            snr50: num(4)?,
        },
        scale: int(5)? as u32,
        backend: field(row, 6).to_owned(),
        metrics,
        status,
        seed: int(12)?,
    })
}

pub fn records_from_reader(input: impl Read) -> std::result::Result<Vec<RunRecord>, String> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(RECORD_COLUMNS.iter().copied()) {
        return Err(format!("unexpected columns {:?}", header.iter().collect::<Vec<_>>()));
    }
    r.records()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| e.to_string())?;
            parse_row(&row).map_err(|e| format!("row {}: {e}", i + 2))
        })
        .collect()
}

pub fn parse_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    records_from_reader(file).map_err(|e| AppError::format(path, e))
}

fn stats_cells(s: Option<&BoxStats>) -> [String; 6] {
    match s {
        Some(s) => [
            s.n.to_string(),
            fmt_float(s.min),
            fmt_float(s.q1),
            fmt_float(s.median),
            fmt_float(s.q3),
            fmt_float(s.max),
        ],
        None => [
            "0".into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ],
    }
}

pub fn export_boxstats(stats: &[AggregateStats], path: &Path) -> Result<()> {
    let rows = stats.iter().map(|a| {
        let mut row = vec![
            a.group_by.to_string(),
            a.metric.to_string(),
            a.key.geography.map(|g| g.to_string()).unwrap_or_default(),
            a.key.crop_id.map(|c| c.to_string()).unwrap_or_default(),
            opt(a.key.gsd),
            opt(a.key.grd),
            opt(a.key.snr50),
        ];
        row.extend(stats_cells(Some(&a.stats)));
        row
    });
    write_rows(create(path)?, &BOXSTAT_COLUMNS, rows).map_err(|e| csv_err(path, e))
}

/// Long format, one row per cell; empty cells have `n = 0` and blank stats.
pub fn export_heatmaps(maps: &[Heatmap], path: &Path) -> Result<()> {
    let mut rows = Vec::new();
    for h in maps {
        for (i, gsd) in h.gsd_values.iter().enumerate() {
            for (j, grd) in h.grd_values.iter().enumerate() {
                let mut row = vec![
                    h.metric.to_string(),
                    fmt_float(h.snr50),
                    fmt_float(*gsd),
                    fmt_float(*grd),
                ];
                row.extend(stats_cells(h.cell(i, j)));
                rows.push(row);
            }
        }
    }
    write_rows(create(path)?, &HEATMAP_COLUMNS, rows).map_err(|e| csv_err(path, e))
}

pub fn export_plateau(cells: &[PlateauCell], path: &Path) -> Result<()> {
    let rows = cells.iter().map(|c| {
        vec![
            fmt_float(c.gsd),
            fmt_float(c.grd),
            opt(c.delta1),
            opt(c.delta2),
            c.saturates().map(|b| b.to_string()).unwrap_or_default(),
        ]
    });
    write_rows(create(path)?, &PLATEAU_COLUMNS, rows).map_err(|e| csv_err(path, e))
}

/// Distinct values of one axis in ascending order.
pub fn axis(records: &[RunRecord], get: impl Fn(&RunRecord) -> f64) -> Vec<f64> {
    let mut v: Vec<f64> = records.iter().map(get).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// GSD x GRD table of medians, `-` for empty cells.
pub fn render_heatmap(h: &Heatmap) -> String {
    let mut s = format!("{} medians at snr50 = {}\n", h.metric, fmt_float(h.snr50));
    let _ = write!(s, "{:>10}", "gsd \\ grd");
    for grd in &h.grd_values {
        let _ = write!(s, "{:>10}", fmt_float(*grd));
    }
    s.push('\n');
    for (i, gsd) in h.gsd_values.iter().enumerate() {
        let _ = write!(s, "{:>10}", fmt_float(*gsd));
        for j in 0..h.grd_values.len() {
            match h.median(i, j) {
                Some(m) => {
                    let _ = write!(s, "{m:>10.4}");
                }
                None => {
                    let _ = write!(s, "{:>10}", "-");
                }
            }
        }
        s.push('\n');
    }
    s
}

/// Trend checks over a finished sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub plateau: Vec<PlateauCell>,
    pub plateau_fraction: f64,
    pub lines: Vec<MonotoneLine>,
    pub monotone_fraction: f64,
}

/// Plateau cells between the lowest, middle (closest to 50) and highest
/// SNR50, and GRD monotonicity over every SNR50 slice.
pub fn trend_report(records: &[RunRecord], metric: Metric) -> Result<TrendReport> {
    let gsd = axis(records, |r| r.point.gsd_product);
    let grd = axis(records, |r| r.point.grd);
    let snr = axis(records, |r| r.point.snr50);
    if snr.len() < 3 {
        return Err(AppError::Validation(
            "trend checks need at least three SNR50 values".into(),
        ));
    }
    let mid = *snr
        .iter()
        .min_by(|a, b| (*a - 50.0).abs().total_cmp(&(*b - 50.0).abs()))
        .expect("nonempty");
    let map = |s: f64| stats::heatmap_table(records, metric, s, &gsd, &grd);
    let plateau = stats::plateau_table(&map(snr[0])?, &map(mid)?, &map(snr[snr.len() - 1])?)?;
    let maps = snr
        .iter()
        .map(|&s| map(s))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let lines = stats::monotone_lines(&maps);
    Ok(TrendReport {
        plateau_fraction: stats::plateau_fraction(&plateau),
        plateau,
        monotone_fraction: stats::monotone_fraction(&lines),
        lines,
    })
}

/// Medians per geography x GSD, failure count and trend fractions.
pub fn summary(records: &[RunRecord]) -> Result<String> {
    let mut s = String::new();
    let failed = records.iter().filter(|r| !r.status.is_ok()).count();
    let _ = writeln!(
        s,
        "records: {} ({} ok, {} failed)",
        records.len(),
        records.len() - failed,
        failed
    );
    for metric in [Metric::SsimGlobal, Metric::Psnr] {
        let _ = writeln!(s, "\nmedian {metric} by geography x gsd");
        for a in stats::aggregate_boxstats(records, GroupBy::GeographyGsd, metric)? {
            let _ = writeln!(
                s,
                "  {:<12} gsd {:<5} median {:>10.4}  [q1 {:.4}, q3 {:.4}]  n={}",
                a.key.geography.map(|g| g.to_string()).unwrap_or_default(),
                opt(a.key.gsd),
                a.stats.median,
                a.stats.q1,
                a.stats.q3,
                a.stats.n
            );
        }
    }
    if let Ok(t) = trend_report(records, Metric::SsimGlobal) {
        let _ = writeln!(
            s,
            "\nssim plateau (first gain > second gain): {:.1}% of cells",
            100.0 * t.plateau_fraction
        );
        let _ = writeln!(
            s,
            "ssim non-increasing in grd: {:.1}% of lines",
            100.0 * t.monotone_fraction
        );
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_float(1.2), "1.2");
        assert_eq!(fmt_float(100.0), "100");
        assert_eq!(fmt_float(0.123456789012), "0.123456789");
        assert_eq!(fmt_float(24.0478482), "24.0478482");
        assert_eq!(fmt_float(1.5e-7), "1.5e-07");
        assert_eq!(fmt_float(123456789012.0), "1.23456789e+11");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!(fmt_float(-0.5), "-0.5");
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(0.99999999999), "1");
    }

    #[test]
    fn nine_digits_survive() {
        for v in [0.1, 1.55, 2.25, 0.000123456789, 987654321.0, 4.66920160910299] {
            let back = parse_float(&fmt_float(v)).unwrap();
            assert!(((back - v) / v).abs() < 5e-9, "{v} -> {back}");
        }
    }

    fn sample() -> Vec<RunRecord> {
        let point = TradeSpacePoint {
            gsd_product: 1.8,
            grd: 1.55,
            snr50: 30.0,
        };
        vec![
            RunRecord {
                geography: Geography::RuralUrban,
                crop_id: 4,
                point,
                scale: 3,
                backend: "bicubic".into(),
                metrics: Some(RunMetrics {
                    mse: 0.00125,
                    psnr_db: f64::INFINITY,
                    ssim_global: 0.875,
                    ssim_win11: None,
                }),
                status: RunStatus::Ok,
                seed: u64::MAX,
            },
            RunRecord {
                geography: Geography::Beach,
                crop_id: 1,
                point,
                scale: 3,
                backend: "external".into(),
                metrics: None,
                status: RunStatus::Failed("adapter timed out, \"hard\"".into()),
                seed: 7,
            },
        ]
    }

    #[test]
    fn records_round_trip() {
        let records = sample();
        let mut buf = Vec::new();
        records_to_writer(&records, &mut buf).unwrap();
        let back = records_from_reader(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], records[1]);
        assert_eq!(back[1], records[0]);
        let mut again = Vec::new();
        records_to_writer(&back, &mut again).unwrap();
        assert_eq!(buf, again);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains(",inf,"));
    }

    #[test]
    fn empty_is_header_only() {
        let mut buf = Vec::new();
        records_to_writer(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", RECORD_COLUMNS.join(","))
        );
        assert_eq!(
            records_from_reader(format!("{}\n", RECORD_COLUMNS.join(",")).as_bytes()).unwrap(),
            vec![]
        );
        assert!(records_from_reader("a,b\n".as_bytes()).is_err());
    }
}

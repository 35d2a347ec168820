//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use tradescope_core::degrade::{self, DegradeSpec};
use tradescope_core::edsr::{Edsr, ModelConfig, WeightStore};
use tradescope_core::metrics;
use tradescope_core::optics::{self, OpticsSpec};
use tradescope_core::raster::BitDepth;
use tradescope_core::resample::Kernel;
use tradescope_core::stats::{self, GroupBy, Metric};
use tradescope_core::sweep::SweepConfig;
use tradescope_core::synth;

use crate::backend::{EdsrBackend, ExternalBackend, Registry};
use crate::config::{BackendSection, FileConfig, OpticsSection};
use crate::error::{AppError, Result};
use crate::io::{load_raster, load_raster_full, save_raster};
use crate::manifest::{write_synthetic_corpus, DatasetManifest};
use crate::{report, runner};

#[derive(Debug, Parser)]
#[command(
    name = "tradescope",
    version,
    about = "Degrade, super-resolve and score overhead imagery"
)]
pub struct Cli {
    /// TOML file whose sections mirror the flags; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OpticsArgs {
    /// Wavelength, m.
    #[arg(long)]
    pub wavelength: Option<f64>,
    /// Orbit altitude, m.
    #[arg(long)]
    pub altitude: Option<f64>,
    /// Inner-to-outer aperture diameter ratio.
    #[arg(long)]
    pub obscuration: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ChainArgs {
    /// Noise model bit depth (8 or 16).
    #[arg(long)]
    pub bit: Option<u32>,
    /// Sensor GSD, m/px; never finer than the product GSD.
    #[arg(long)]
    pub gsd_sensor: Option<f64>,
    /// Kernel for coarsening steps.
    #[arg(long)]
    pub resample_down: Option<String>,
    /// Kernel for refining steps.
    #[arg(long)]
    pub resample_up: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BackendArgs {
    /// nearest, bilinear, bicubic, lanczos3, edsr or external.
    #[arg(long)]
    pub backend: Option<String>,
    /// EDSR weight file; repeat for several scales.
    #[arg(long)]
    pub weights: Vec<PathBuf>,
    #[arg(long)]
    pub n_blocks: Option<usize>,
    #[arg(long)]
    pub n_feats: Option<usize>,
    #[arg(long)]
    pub residual_scaling: Option<f32>,
    /// Random EDSR weights for every scale (demo only).
    #[arg(long)]
    pub edsr_seed: Option<u64>,
    /// Adapter executable for the external backend.
    #[arg(long)]
    pub adapter: Option<PathBuf>,
    /// Extra argument placed before the job path; repeatable.
    #[arg(long = "adapter-arg", allow_hyphen_values = true)]
    pub adapter_args: Vec<String>,
    #[arg(long)]
    pub timeout_secs: Option<f64>,
    /// Adapter parameter `key=value`; values are parsed as JSON when possible.
    #[arg(long = "param", value_parser = parse_key_value)]
    pub params: Vec<(String, String)>,
}

fn parse_key_value(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    All,
    Boxstats,
    Heatmap,
    Plateau,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blur, resample and add shot noise to one image.
    Degrade {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        /// GSD of the input, m/px; read from the file tag when omitted.
        #[arg(long)]
        gsd_original: Option<f64>,
        #[arg(long)]
        gsd_product: Option<f64>,
        #[arg(long)]
        grd: Option<f64>,
        #[arg(long)]
        snr50: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Bit depth of the written image.
        #[arg(long)]
        save_bit: Option<u32>,
        /// Stage-log JSON path; defaults to `<out>.stages.json`.
        #[arg(long)]
        stage_log: Option<PathBuf>,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        optics: OpticsArgs,
    },
    /// Super-resolve one image.
    Upscale {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        #[arg(long)]
        scale: u32,
        #[arg(long)]
        save_bit: Option<u32>,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Score a candidate against a reference.
    Evaluate {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        /// Append a row to this CSV, writing the header if it is new.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the full trade-space sweep and write records.csv.
    Sweep {
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Dataset manifest; the bundled synthetic corpus when omitted.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        gsd: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        grd: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        snr50: Option<Vec<f64>>,
        /// Global seed every noise draw derives from.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "TRADESCOPE_JOBS")]
        jobs: Option<usize>,
        /// Seed of the synthetic corpus.
        #[arg(long)]
        corpus_seed: Option<u64>,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        optics: OpticsArgs,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Derive box statistics, heatmaps and a summary from records.csv.
    Report {
        #[arg(long)]
        records: PathBuf,
        /// Output directory; the records' directory when omitted.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Figure::All)]
        figure: Figure,
        #[arg(long)]
        snr50: Option<f64>,
        #[arg(long, default_value = "ssim_global")]
        metric: String,
        #[arg(long)]
        group_by: Option<String>,
    },
    /// Write the synthetic corpus as PNGs with a manifest.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write seeded EDSR weights.
    InitWeights {
        #[arg(long = "out")]
        output: PathBuf,
        #[arg(long)]
        scale: u32,
        #[arg(long)]
        n_blocks: Option<usize>,
        #[arg(long)]
        n_feats: Option<usize>,
        #[arg(long)]
        residual_scaling: Option<f32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the PSF for one GRD on one grid, optionally dumping the kernel.
    Psf {
        #[arg(long)]
        grd: f64,
        #[arg(long)]
        gsd: f64,
        /// Kernel as CSV rows.
        #[arg(long = "out")]
        output: Option<PathBuf>,
        #[command(flatten)]
        optics: OpticsArgs,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn invalid(msg: impl Into<String>) -> AppError {
    AppError::Validation(msg.into())
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| invalid(format!("missing required flag --{flag}")))
}

fn kernel(name: Option<String>, default: Kernel, flag: &str) -> Result<Kernel> {
    match name {
        Some(n) => n.parse().map_err(|e| invalid(format!("--{flag}: {e}"))),
        None => Ok(default),
    }
}

fn bit_depth(bits: Option<u32>, default: BitDepth, flag: &str) -> Result<BitDepth> {
    match bits {
        Some(b) => BitDepth::from_bits(b).map_err(|e| invalid(format!("--{flag}: {e}"))),
        None => Ok(default),
    }
}

/// Validation failures in core types surface as exit code 1.
fn check(r: tradescope_core::Result<()>) -> Result<()> {
    r.map_err(|e| invalid(e.to_string()))
}

fn optics_spec(flags: &OpticsArgs, file: &OpticsSection) -> Result<OpticsSpec> {
    let d = OpticsSpec::default();
    let spec = OpticsSpec {
        wavelength: flags.wavelength.or(file.wavelength).unwrap_or(d.wavelength),
        altitude: flags.altitude.or(file.altitude).unwrap_or(d.altitude),
        obscuration: flags.obscuration.or(file.obscuration).unwrap_or(d.obscuration),
        ..d
    };
    check(spec.validate())?;
    Ok(spec)
}

fn execute(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Degrade {
            input,
            output,
            gsd_original,
            gsd_product,
            grd,
            snr50,
            seed,
            save_bit,
            stage_log,
            chain,
            optics,
        } => {
            let f = &file.degrade;
            let snr50 = require(snr50.or(f.snr50), "snr50")?;
            let grd = require(grd.or(f.grd), "grd")?;
            let gsd_product = require(gsd_product.or(f.gsd_product), "gsd-product")?;
            let optics = optics_spec(&optics, &file.optics)?;
            let mut spec = DegradeSpec {
                gsd_sensor: chain.gsd_sensor.or(f.gsd_sensor),
                bit: bit_depth(chain.bit.or(f.bit), BitDepth::Eight, "bit")?,
                resample_down: kernel(
                    chain.resample_down.or(f.resample_down.clone()),
                    Kernel::AreaAverage,
                    "resample-down",
                )?,
                resample_up: kernel(
                    chain.resample_up.or(f.resample_up.clone()),
                    Kernel::Bicubic,
                    "resample-up",
                )?,
                ..DegradeSpec::new(
                    gsd_original.or(f.gsd_original).unwrap_or(crate::io::DEFAULT_GSD),
                    gsd_product,
                    grd,
                    snr50,
                    seed.or(f.seed).unwrap_or(0),
                )
            };
            let save_bit = bit_depth(save_bit.or(f.save_bit), BitDepth::Sixteen, "save-bit")?;
            check(spec.validate())?;

            let loaded = load_raster_full(&input)?;
            if gsd_original.or(f.gsd_original).is_none() && loaded.tagged_gsd {
                spec.gsd_original = loaded.raster.gsd();
            }
            let image = loaded.raster.with_gsd(spec.gsd_original)?;
            let out = degrade::degrade(&image, &spec, &optics)?;
            save_raster(&out.raster, &output, save_bit)?;
            let log_path = stage_log.unwrap_or_else(|| sidecar(&output));
            write_stage_log(&log_path, &input, &out)?;
            info!(
                "wrote {} ({}x{})",
                output.display(),
                out.raster.width(),
                out.raster.height()
            );
            Ok(())
        }
        Command::Upscale {
            input,
            output,
            scale,
            save_bit,
            backend,
        } => {
            let id = backend_id(&backend, &file.backend);
            let save_bit = bit_depth(save_bit.or(file.degrade.save_bit), BitDepth::Sixteen, "save-bit")?;
            let registry = build_registry(&id, &backend, &file.backend, Some(scale))?;
            let image = load_raster(&input)?;
            let result = registry.upscale(&id, &image, scale)?;
            save_raster(&result.output, &output, save_bit)?;
            info!("{} in {:.3}s", id, result.wall_time);
            Ok(())
        }
        Command::Evaluate {
            reference,
            candidate,
            csv,
        } => {
            let r = load_raster(&reference)?;
            let c = load_raster(&candidate)?;
            let m = metrics::evaluate(&r, &c, reference.display().to_string(), candidate.display().to_string())
                .map_err(|e| match e {
                    tradescope_core::Error::DimensionMismatch(msg) => invalid(msg),
                    other => other.into(),
                })?;
            let win = m.ssim_windowed.map(report::fmt_float).unwrap_or_else(|| "n/a".into());
            println!(
                "mse {}\npsnr_db {}\nssim_global {}\nssim_win11 {}",
                report::fmt_float(m.mse),
                report::fmt_float(m.psnr),
                report::fmt_float(m.ssim),
                win
            );
            if let Some(path) = csv {
                append_metric_row(&path, &m)?;
            }
            Ok(())
        }
        Command::Sweep {
            out_dir,
            manifest,
            gsd,
            grd,
            snr50,
            seed,
            jobs,
            corpus_seed,
            chain,
            optics,
            backend,
        } => {
            let s = &file.sweep;
            let f = &file.degrade;
            let id = backend_id(&backend, &file.backend);
            let defaults = SweepConfig::default();
            let config = SweepConfig {
                gsd_values: gsd.or(s.gsd.clone()).unwrap_or(defaults.gsd_values),
                grd_values: grd.or(s.grd.clone()).unwrap_or(defaults.grd_values),
                snr50_values: snr50.or(s.snr50.clone()).unwrap_or(defaults.snr50_values),
                backend_id: id.clone(),
                global_seed: seed.or(s.seed).unwrap_or(0),
                bit: bit_depth(chain.bit.or(f.bit), BitDepth::Eight, "bit")?,
                gsd_sensor: chain.gsd_sensor.or(f.gsd_sensor),
                resample_down: kernel(
                    chain.resample_down.or(f.resample_down.clone()),
                    Kernel::AreaAverage,
                    "resample-down",
                )?,
                resample_up: kernel(
                    chain.resample_up.or(f.resample_up.clone()),
                    Kernel::Bicubic,
                    "resample-up",
                )?,
            };
            check(config.validate())?;
            if let Some(s) = config.gsd_sensor {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(invalid("--gsd-sensor must be > 0"));
                }
            }
            let optics = optics_spec(&optics, &file.optics)?;
            let out_dir = require(out_dir.or(s.out_dir.clone()), "out-dir")?;
            let jobs = runner::resolve_jobs(jobs.or(s.jobs));
            let registry = build_registry(&id, &backend, &file.backend, None)?;

            let crops = match manifest.or(s.manifest.clone()) {
                Some(path) => DatasetManifest::load(&path)?.load_crops()?,
                None => synth::corpus(corpus_seed.or(s.corpus_seed).unwrap_or(0))?,
            };
            let records = runner::run_sweep(&config, &crops, &registry, &optics, jobs)?;
            fs::create_dir_all(&out_dir).map_err(|e| AppError::io(&out_dir, e))?;
            let path = out_dir.join("records.csv");
            report::export_records(&records, &path)?;
            let failed = records.iter().filter(|r| !r.status.is_ok()).count();
            println!("{} records ({} failed) -> {}", records.len(), failed, path.display());
            if failed == records.len() {
                return Err(AppError::AllFailed(failed));
            }
            Ok(())
        }
        Command::Report {
            records,
            out_dir,
            figure,
            snr50,
            metric,
            group_by,
        } => cmd_report(&records, out_dir, figure, snr50, &metric, group_by.as_deref()),
        Command::Synth { out_dir, seed } => {
            let path = write_synthetic_corpus(&out_dir, seed)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::InitWeights {
            output,
            scale,
            n_blocks,
            n_feats,
            residual_scaling,
            seed,
        } => {
            let b = &file.backend;
            let config = model_config(
                n_blocks.or(b.n_blocks),
                n_feats.or(b.n_feats),
                residual_scaling.or(b.residual_scaling),
                scale,
            );
            check(config.validate())?;
            let store = WeightStore::seeded(config, seed);
            fs::write(&output, store.to_bytes()).map_err(|e| AppError::io(&output, e))?;
            println!("{} parameters -> {}", store.parameter_count(), output.display());
            Ok(())
        }
        Command::Psf {
            grd,
            gsd,
            output,
            optics,
        } => {
            let spec = optics_spec(&optics, &file.optics)?
                .with_grd(grd)
                .map_err(|e| invalid(e.to_string()))?;
            let psf = optics::psf_for_grd(grd, &spec, gsd).map_err(|e| match e {
                e @ tradescope_core::Error::OpticsUnresolvable { .. } => invalid(e.to_string()),
                other => other.into(),
            })?;
            println!("grd_m {}", report::fmt_float(grd));
            println!("aperture_m {}", report::fmt_float(spec.aperture_diameter));
            println!("cutoff_cycles_per_m {}", report::fmt_float(spec.cutoff_frequency()));
            println!("support_px {}", psf.support);
            println!("center_weight {}", report::fmt_float(psf.center_weight()));
            println!(
                "second_moment_radius_px {}",
                report::fmt_float(psf.second_moment_radius())
            );
            if let Some(path) = output {
                let mut text = String::new();
                for row in psf.kernel.chunks(psf.support) {
                    let cells: Vec<String> = row.iter().map(|v| report::fmt_float(*v)).collect();
                    text.push_str(&cells.join(","));
                    text.push('\n');
                }
                fs::write(&path, text).map_err(|e| AppError::io(&path, e))?;
            }
            Ok(())
        }
    }
}

fn sidecar(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".stages.json");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct StageLogFile<'a> {
    input: String,
    gsd_original: f64,
    gsd_sensor: f64,
    gsd_product: f64,
    grd: f64,
    snr50: f64,
    well_capacity: f64,
    bit: u32,
    seed: u64,
    resample_down: &'a str,
    resample_up: &'a str,
    stages: Vec<StageEntry>,
}

#[derive(Serialize)]
struct StageEntry {
    stage: &'static str,
    width: usize,
    height: usize,
    channels: usize,
    checksum: String,
}

fn write_stage_log(path: &Path, input: &Path, out: &degrade::DegradedRaster) -> Result<()> {
    let s = &out.spec;
    let log = StageLogFile {
        input: input.display().to_string(),
        gsd_original: s.gsd_original,
        gsd_sensor: s.effective_sensor_gsd(),
        gsd_product: s.gsd_product,
        grd: s.grd,
        snr50: s.snr50,
        well_capacity: s.well_capacity(),
        bit: s.bit.bits(),
        seed: s.seed,
        resample_down: s.resample_down.as_str(),
        resample_up: s.resample_up.as_str(),
        stages: out
            .stage_log
            .iter()
            .map(|r| StageEntry {
                stage: r.stage.as_str(),
                width: r.width,
                height: r.height,
                channels: r.channels,
                checksum: format!("{:016x}", r.checksum),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&log).expect("stage log serializes");
    fs::write(path, text + "\n").map_err(|e| AppError::io(path, e))
}

fn append_metric_row(path: &Path, m: &metrics::MetricRecord) -> Result<()> {
    let fresh = !path.exists();
    let file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| AppError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let io_err = |e: csv::Error| AppError::io(path, std::io::Error::other(e.to_string()));
    if fresh {
        w.write_record(["reference", "candidate", "mse", "psnr_db", "ssim_global", "ssim_win11"])
            .map_err(io_err)?;
    }
    w.write_record([
        m.reference_id.clone(),
        m.candidate_id.clone(),
        report::fmt_float(m.mse),
        report::fmt_float(m.psnr),
        report::fmt_float(m.ssim),
        m.ssim_windowed.map(report::fmt_float).unwrap_or_default(),
    ])
    .map_err(io_err)?;
    w.flush().map_err(|e| AppError::io(path, e))
}

fn backend_id(flags: &BackendArgs, file: &BackendSection) -> String {
    flags
        .backend
        .clone()
        .or(file.id.clone())
        .unwrap_or_else(|| "bicubic".into())
}

fn model_config(
    n_blocks: Option<usize>,
    n_feats: Option<usize>,
    residual_scaling: Option<f32>,
    scale: u32,
) -> ModelConfig {
    let d = ModelConfig::desk(scale);
    ModelConfig {
        n_blocks: n_blocks.unwrap_or(d.n_blocks),
        n_feats: n_feats.unwrap_or(d.n_feats),
        residual_scaling: residual_scaling.unwrap_or(d.residual_scaling),
        ..d
    }
}

/// Builtins plus the requested learned or external backend.
fn build_registry(id: &str, flags: &BackendArgs, file: &BackendSection, scale: Option<u32>) -> Result<Registry> {
    let mut registry = Registry::with_builtins();
    match id {
        "edsr" => {
            let n_blocks = flags.n_blocks.or(file.n_blocks);
            let n_feats = flags.n_feats.or(file.n_feats);
            let rs = flags.residual_scaling.or(file.residual_scaling);
            let weights = if flags.weights.is_empty() {
                file.weights.clone().unwrap_or_default()
            } else {
                flags.weights.clone()
            };
            let backend = if !weights.is_empty() {
                let mut models = Vec::new();
                for path in &weights {
                    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
                    let stored = WeightStore::peek_config(&bytes).map_err(|e| AppError::Backend(e.into()))?;
                    let expected = model_config(n_blocks, n_feats, rs, scale.unwrap_or(stored.scale));
                    check(expected.validate())?;
                    let store = WeightStore::from_bytes(&bytes, &expected).map_err(|e| AppError::Backend(e.into()))?;
                    models.push(Edsr::new(store).map_err(|e| AppError::Backend(e.into()))?);
                }
                EdsrBackend::new(models)
            } else if let Some(seed) = flags.edsr_seed.or(file.edsr_seed) {
                let base = model_config(n_blocks, n_feats, rs, 2);
                check(base.validate())?;
                EdsrBackend::seeded(base, seed)?
            } else {
                return Err(invalid("the edsr backend needs --weights or --edsr-seed"));
            };
            registry.register("edsr", backend)?;
        }
        "external" => {
            let program = require(flags.adapter.clone().or(file.adapter.clone()), "adapter")?;
            let mut ext = ExternalBackend::new(program);
            ext.args = if flags.adapter_args.is_empty() {
                file.adapter_args.clone().unwrap_or_default()
            } else {
                flags.adapter_args.clone()
            };
            if let Some(t) = flags.timeout_secs.or(file.timeout_secs) {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(invalid("--timeout-secs must be > 0"));
                }
                ext.timeout = Duration::from_secs_f64(t);
            }
            if let Some(table) = &file.params {
                for (k, v) in table {
                    let json = serde_json::to_value(v).map_err(|e| invalid(e.to_string()))?;
                    ext.params.insert(k.clone(), json);
                }
            }
            for (k, v) in &flags.params {
                let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.clone()));
                ext.params.insert(k.clone(), value);
            }
            registry.register("external", ext)?;
        }
        other => {
            registry.get(other)?;
        }
    }
    Ok(registry)
}

fn cmd_report(
    records_path: &Path,
    out_dir: Option<PathBuf>,
    figure: Figure,
    snr50: Option<f64>,
    metric: &str,
    group_by: Option<&str>,
) -> Result<()> {
    let metric: Metric = metric
        .parse()
        .map_err(|e: tradescope_core::Error| invalid(e.to_string()))?;
    let group_by: Option<GroupBy> = group_by
        .map(|g| g.parse().map_err(|e: tradescope_core::Error| invalid(e.to_string())))
        .transpose()?;
    let records = report::parse_records(records_path)?;
    if !records.iter().any(|r| r.status.is_ok()) {
        return Err(invalid(format!(
            "{} holds no successful records",
            records_path.display()
        )));
    }
    let out_dir = out_dir.unwrap_or_else(|| records_path.parent().unwrap_or(Path::new(".")).to_path_buf());
    fs::create_dir_all(&out_dir).map_err(|e| AppError::io(&out_dir, e))?;
    let gsd = report::axis(&records, |r| r.point.gsd_product);
    let grd = report::axis(&records, |r| r.point.grd);
    let snr_axis = report::axis(&records, |r| r.point.snr50);
    let stats_err = |e: tradescope_core::Error| match e {
        e @ (tradescope_core::Error::MissingSlice(_) | tradescope_core::Error::EmptyGroup) => invalid(e.to_string()),
        other => other.into(),
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();

    if matches!(figure, Figure::All | Figure::Boxstats) {
        let groups: Vec<GroupBy> = group_by.map(|g| vec![g]).unwrap_or_else(|| GroupBy::ALL.to_vec());
        let metrics: Vec<Metric> = if figure == Figure::All {
            Metric::ALL.to_vec()
        } else {
            vec![metric]
        };
        let mut all = Vec::new();
        for g in &groups {
            for m in &metrics {
                match stats::aggregate_boxstats(&records, *g, *m) {
                    Ok(s) => all.extend(s),
                    Err(tradescope_core::Error::EmptyGroup) => {}
                    Err(e) => return Err(e.into()),
                }
            }
        }
        report::export_boxstats(&all, &out_dir.join("boxstats.csv"))?;
        if figure == Figure::Boxstats {
            for a in &all {
                let _ = writeln!(
                    out,
                    "{:<12} {:>5} {:>6} {:>6} {:>6}  min {:.4} q1 {:.4} median {:.4} q3 {:.4} max {:.4} n {}",
                    a.key.geography.map(|g| g.to_string()).unwrap_or_default(),
                    a.key.crop_id.map(|c| c.to_string()).unwrap_or_default(),
                    a.key.gsd.map(report::fmt_float).unwrap_or_default(),
                    a.key.grd.map(report::fmt_float).unwrap_or_default(),
                    a.key.snr50.map(report::fmt_float).unwrap_or_default(),
                    a.stats.min,
                    a.stats.q1,
                    a.stats.median,
                    a.stats.q3,
                    a.stats.max,
                    a.stats.n
                );
            }
        }
    }
    if matches!(figure, Figure::All | Figure::Heatmap) {
        let slices = match snr50 {
            Some(s) => vec![s],
            None => snr_axis.clone(),
        };
        let maps = slices
            .iter()
            .map(|&s| stats::heatmap_table(&records, metric, s, &gsd, &grd))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(stats_err)?;
        report::export_heatmaps(&maps, &out_dir.join("heatmap.csv"))?;
        if figure == Figure::Heatmap {
            for h in &maps {
                let _ = writeln!(out, "{}", report::render_heatmap(h));
            }
        }
    }
    if matches!(figure, Figure::All | Figure::Plateau) {
        match report::trend_report(&records, metric) {
            Ok(t) => {
                report::export_plateau(&t.plateau, &out_dir.join("plateau.csv"))?;
                if figure == Figure::Plateau {
                    for c in &t.plateau {
                        let _ = writeln!(
                            out,
                            "gsd {:<5} grd {:<5} delta1 {:>8} delta2 {:>8}",
                            report::fmt_float(c.gsd),
                            report::fmt_float(c.grd),
                            c.delta1.map(|d| format!("{d:.4}")).unwrap_or_else(|| "-".into()),
                            c.delta2.map(|d| format!("{d:.4}")).unwrap_or_else(|| "-".into())
                        );
                    }
                    let _ = writeln!(out, "saturating cells: {:.1}%", 100.0 * t.plateau_fraction);
                }
            }
            Err(e) if figure == Figure::Plateau => return Err(e),
            Err(_) => {}
        }
    }
    if figure == Figure::All {
        let text = report::summary(&records).map_err(|e| match e {
            AppError::Pipeline(inner) => stats_err(inner),
            other => other,
        })?;
        let path = out_dir.join("summary.txt");
        fs::write(&path, &text).map_err(|e| AppError::io(&path, e))?;
        let _ = write!(out, "{text}");
    }
    Ok(())
}

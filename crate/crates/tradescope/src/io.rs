//! Lossless PNG storage for rasters.
//!
//! 8- and 16-bit grayscale or RGB only. The ground sampling distance travels
//! in a `tEXt` chunk; files without one load at [`DEFAULT_GSD`].

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use png::{BitDepth as PngDepth, ColorType, Transformations};
use tradescope_core::raster::BitDepth;
use tradescope_core::Raster;

use crate::error::{AppError, Result};

pub const GSD_KEY: &str = "tradescope:gsd";
pub const DEFAULT_GSD: f64 = 0.6;

/// A decoded image with its stored sample depth.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRaster {
    pub raster: Raster,
    pub bit: BitDepth,
    /// Whether the file carried a GSD tag.
    pub tagged_gsd: bool,
}

pub fn load_raster(path: &Path) -> Result<Raster> {
    Ok(load_raster_full(path)?.raster)
}

pub fn load_raster_full(path: &Path) -> Result<LoadedRaster> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| AppError::format(path, e))?;

    let info = reader.info();
    let channels = match info.color_type {
        ColorType::Grayscale => 1,
        ColorType::Rgb => 3,
        other => return Err(AppError::format(path, format!("unsupported color type {other:?}"))),
    };
    let bit = match info.bit_depth {
        PngDepth::Eight => BitDepth::Eight,
        PngDepth::Sixteen => BitDepth::Sixteen,
        other => return Err(AppError::format(path, format!("unsupported bit depth {other:?}"))),
    };
    let tag = info
        .uncompressed_latin1_text
        .iter()
        .find(|t| t.keyword == GSD_KEY)
        .map(|t| t.text.trim().to_owned());
    let gsd = match &tag {
        Some(text) => text
            .parse::<f64>()
            .map_err(|_| AppError::format(path, format!("bad {GSD_KEY} value `{text}`")))?,
        None => DEFAULT_GSD,
    };
    let (width, height) = (info.width as usize, info.height as usize);

    let size = reader
        .output_buffer_size()
        .ok_or_else(|| AppError::format(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| AppError::format(path, e))?;
    let bytes = &buf[..frame.buffer_size()];
    let line = frame.line_size;
    let row_len = width * channels * if bit == BitDepth::Sixteen { 2 } else { 1 };

    let mut samples = Vec::with_capacity(width * height * channels);
    for row in bytes.chunks(line).take(height) {
        let row = &row[..row_len];
        match bit {
            BitDepth::Eight => samples.extend(row.iter().map(|&b| u16::from(b))),
            BitDepth::Sixteen => samples.extend(row.chunks_exact(2).map(|p| u16::from_be_bytes([p[0], p[1]]))),
        }
    }
    let raster = Raster::from_samples(width, height, channels, &samples, bit, gsd)?;
    Ok(LoadedRaster {
        raster,
        bit,
        tagged_gsd: tag.is_some(),
    })
}

/// Quantizes with round-half-up and writes a PNG tagged with the raster's GSD.
pub fn save_raster(raster: &Raster, path: &Path, bit: BitDepth) -> Result<()> {
    let samples = raster.to_samples(bit)?;
    let color = match raster.channels() {
        1 => ColorType::Grayscale,
        3 => ColorType::Rgb,
        n => return Err(AppError::Validation(format!("cannot store {n}-channel rasters"))),
    };
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), raster.width() as u32, raster.height() as u32);
    encoder.set_color(color);
    encoder.set_depth(match bit {
        BitDepth::Eight => PngDepth::Eight,
        BitDepth::Sixteen => PngDepth::Sixteen,
    });
    encoder
        .add_text_chunk(GSD_KEY.to_owned(), format!("{:?}", raster.gsd()))
        .map_err(|e| AppError::format(path, e))?;
    let mut writer = encoder.write_header().map_err(|e| AppError::format(path, e))?;
    let bytes: Vec<u8> = match bit {
        BitDepth::Eight => samples.iter().map(|&s| s as u8).collect(),
        BitDepth::Sixteen => samples.iter().flat_map(|s| s.to_be_bytes()).collect(),
    };
    writer.write_image_data(&bytes).map_err(|e| AppError::format(path, e))?;
    writer.finish().map_err(|e| AppError::format(path, e))
}

//! Floating point rasters in ground coordinates.
//!
//! Samples are stored row-major with channels interleaved (`RGBRGB...`).
//! Intensities live in `[0, 1]`; the bit depth only matters at the file
//! boundary, see [`quantize`] and [`dequantize`].

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
    gsd: f64,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>, gsd: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("dims", "width and height must be at least 1"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::param("channels", alloc::format!("{channels} (expected 1 or 3)")));
        }
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} samples for a {width}x{height}x{channels} raster",
                data.len()
            )));
        }
        if !(gsd > 0.0 && gsd.is_finite()) {
            return Err(Error::param("gsd", alloc::format!("{gsd} (must be > 0)")));
        }
        if let Some((i, v)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::param("data", alloc::format!("non-finite sample {v} at {i}")));
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
            gsd,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64, gsd: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            alloc::vec![value; width * height * channels],
            gsd,
        )
    }

    /// Builds a raster from per-channel planes of `width * height` samples each.
    pub fn from_planes(width: usize, height: usize, planes: &[Vec<f64>], gsd: f64) -> Result<Self> {
        let channels = planes.len();
        let n = width * height;
        if planes.iter().any(|p| p.len() != n) {
            return Err(Error::DimensionMismatch(alloc::format!(
                "planes must hold {n} samples each"
            )));
        }
        let mut data = Vec::with_capacity(n * channels);
        for i in 0..n {
            for p in planes {
                data.push(p[i]);
            }
        }
        Self::new(width, height, channels, data, gsd)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn gsd(&self) -> f64 {
        self.gsd
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Ground extent covered along x and y, in meters.
    pub fn extent(&self) -> (f64, f64) {
        (self.width as f64 * self.gsd, self.height as f64 * self.gsd)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn same_shape(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Copy of channel `c` as a row-major plane.
    pub fn plane(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(self.channels).copied().collect()
    }

    pub fn planes(&self) -> Vec<Vec<f64>> {
        (0..self.channels).map(|c| self.plane(c)).collect()
    }

    pub fn with_gsd(mut self, gsd: f64) -> Result<Self> {
        if !(gsd > 0.0 && gsd.is_finite()) {
            return Err(Error::param("gsd", alloc::format!("{gsd} (must be > 0)")));
        }
        self.gsd = gsd;
        Ok(self)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn is_unit_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub fn clamp_unit(mut self) -> Self {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }

    /// Quantizes every sample to `bit`-bit integers, rejecting out-of-range intensities.
    pub fn to_samples(&self, bit: BitDepth) -> Result<Vec<u16>> {
        self.data
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                if (0.0..=1.0).contains(&value) {
                    Ok(quantize(value, bit))
                } else {
                    Err(Error::IntensityOutOfRange { index, value })
                }
            })
            .collect()
    }

    pub fn from_samples(
        width: usize,
        height: usize,
        channels: usize,
        samples: &[u16],
        bit: BitDepth,
        gsd: f64,
    ) -> Result<Self> {
        let max = bit.max_value();
        if let Some(&s) = samples.iter().find(|&&s| u32::from(s) > max) {
            return Err(Error::param("samples", alloc::format!("{s} exceeds {bit}-bit range")));
        }
        let data = samples.iter().map(|&s| dequantize(s, bit)).collect();
        Self::new(width, height, channels, data, gsd)
    }

    /// Copies the `w`x`h` window whose top-left corner is `(x, y)`.
    pub fn crop_region(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Raster> {
        let fits = w > 0
            && h > 0
            && x.checked_add(w).is_some_and(|e| e <= self.width)
            && y.checked_add(h).is_some_and(|e| e <= self.height);
        if !fits {
            return Err(Error::OutOfBounds {
                x,
                y,
                w,
                h,
                width: self.width,
                height: self.height,
            });
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(w * h * c);
        for row in y..y + h {
            let start = (row * self.width + x) * c;
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        Ok(Raster {
            width: w,
            height: h,
            channels: c,
            data,
            gsd: self.gsd,
        })
    }

    /// Replaces the sample buffer, keeping shape and GSD.
    pub(crate) fn with_data(&self, data: Vec<f64>) -> Raster {
        Raster::shaped(self.width, self.height, self.channels, data, self.gsd)
    }

    pub(crate) fn shaped(width: usize, height: usize, channels: usize, data: Vec<f64>, gsd: f64) -> Raster {
        debug_assert_eq!(data.len(), width * height * channels);
        Raster {
            width,
            height,
            channels,
            data,
            gsd,
        }
    }
}

/// Sample bit depth at the file boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(Error::param("bit", alloc::format!("{other} (expected 8 or 16)"))),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    /// `2^bit - 1`
    pub fn max_value(self) -> u32 {
        (1u32 << self.bits()) - 1
    }

    /// `2^bit`
    pub fn levels(self) -> f64 {
        f64::from(1u32 << self.bits())
    }
}

impl fmt::Display for BitDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits())
    }
}

/// `round(v * (2^bit - 1))` with halves rounded up. `v` must already be in `[0, 1]`.
#[inline]
pub fn quantize(value: f64, bit: BitDepth) -> u16 {
    let max = f64::from(bit.max_value());
    libm::floor(value * max + 0.5).clamp(0.0, max) as u16
}

#[inline]
pub fn dequantize(sample: u16, bit: BitDepth) -> f64 {
    f64::from(sample) / f64::from(bit.max_value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Geography {
    Beach,
    Forest,
    Rural,
    RuralUrban,
    Urban,
}

impl Geography {
    pub const ALL: [Geography; 5] = [
        Geography::Beach,
        Geography::Forest,
        Geography::Rural,
        Geography::RuralUrban,
        Geography::Urban,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Geography::Beach => "beach",
            Geography::Forest => "forest",
            Geography::Rural => "rural",
            Geography::RuralUrban => "rural_urban",
            Geography::Urban => "urban",
        }
    }
}

impl fmt::Display for Geography {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Geography {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Geography::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::param("geography", alloc::format!("unknown label `{s}`")))
    }
}

/// A hand-picked crop tagged with its terrain label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCrop {
    pub geography: Geography,
    pub crop_id: u32,
    pub raster: Raster,
}

impl LabeledCrop {
    pub fn new(geography: Geography, crop_id: u32, raster: Raster) -> Result<Self> {
        if crop_id == 0 {
            return Err(Error::param("crop_id", "must be >= 1"));
        }
        Ok(LabeledCrop {
            geography,
            crop_id,
            raster,
        })
    }
}

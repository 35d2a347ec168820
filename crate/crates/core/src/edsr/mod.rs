//! Forward-only EDSR inference.
//!
//! Layout: head conv (3 → F), `n_blocks` residual blocks of
//! conv → ReLU → conv with a scaled skip connection, a body conv, a global
//! skip from the head output, the sub-pixel upsampler and a tail conv back
//! to 3 channels. The upsampler is one conv + pixel shuffle stage for ×2 and
//! ×3, and two ×2 stages for ×4.
//!
//! Activations are kept in `f64`; weights are stored as `f32`.

mod weights;

use alloc::string::String;
use alloc::vec::Vec;

pub use weights::{ConvLayer, LayerShape, WeightStore, WEIGHT_MAGIC};

use crate::filter::reflect;
use crate::{Error, Raster, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub n_blocks: usize,
    pub n_feats: usize,
    pub scale: u32,
    pub kernel_size: usize,
    pub residual_scaling: f32,
}

impl ModelConfig {
    /// Desk-scale default: 8 blocks of 32 features.
    pub fn desk(scale: u32) -> Self {
        ModelConfig {
            n_blocks: 8,
            n_feats: 32,
            scale,
            kernel_size: 3,
            residual_scaling: 1.0,
        }
    }

    /// The published baseline: 32 blocks of 64 features.
    pub fn reference_scale(scale: u32) -> Self {
        ModelConfig {
            n_blocks: 32,
            n_feats: 64,
            ..Self::desk(scale)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_blocks == 0 {
            return Err(Error::param("n_blocks", "must be >= 1"));
        }
        if self.n_feats == 0 {
            return Err(Error::param("n_feats", "must be >= 1"));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::param(
                "kernel_size",
                alloc::format!("{} (must be odd)", self.kernel_size),
            ));
        }
        if !self.residual_scaling.is_finite() {
            return Err(Error::param("residual_scaling", "must be finite"));
        }
        upsampler_factors(self.scale)?;
        Ok(())
    }
}

/// Pixel-shuffle factors applied in sequence for a given scale.
pub fn upsampler_factors(scale: u32) -> Result<&'static [usize]> {
    match scale {
        2 => Ok(&[2]),
        3 => Ok(&[3]),
        4 => Ok(&[2, 2]),
        other => Err(Error::UnsupportedScale(other)),
    }
}

/// Channel-major activations: `data[(c * height + y) * width + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} values for a {width}x{height}x{channels} feature map",
                data.len()
            )));
        }
        Ok(FeatureMap {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        FeatureMap {
            width,
            height,
            channels,
            data: alloc::vec![0.0; width * height * channels],
        }
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    /// RGB feature map from a raster; grayscale is replicated into three channels.
    pub fn from_raster(image: &Raster) -> Self {
        let planes = image.planes();
        let mut data = Vec::with_capacity(image.width() * image.height() * 3);
        for c in 0..3 {
            data.extend_from_slice(&planes[c.min(planes.len() - 1)]);
        }
        FeatureMap {
            width: image.width(),
            height: image.height(),
            channels: 3,
            data,
        }
    }

    fn check_finite(&self, layer: &str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(String::from(layer)))
        }
    }
}

/// Same-size cross-correlation with reflected borders.
pub fn conv2d(input: &FeatureMap, layer: &ConvLayer) -> Result<FeatureMap> {
    let shape = layer.shape;
    if shape.in_channels != input.channels {
        return Err(Error::DimensionMismatch(alloc::format!(
            "layer `{}` expects {} input channels, got {}",
            layer.name,
            shape.in_channels,
            input.channels
        )));
    }
    let (w, h, k) = (input.width, input.height, shape.kernel);
    let r = k / 2;
    let pw = w + 2 * r;
    let ph = h + 2 * r;

    let mut padded = Vec::with_capacity(pw * ph * input.channels);
    for c in 0..input.channels {
        let plane = input.plane(c);
        for py in 0..ph {
            let sy = reflect(py as isize - r as isize, h);
            for px in 0..pw {
                let sx = reflect(px as isize - r as isize, w);
                padded.push(plane[sy * w + sx]);
            }
        }
    }

    let mut out = Vec::with_capacity(w * h * shape.out_channels);
    for o in 0..shape.out_channels {
        let mut acc = alloc::vec![f64::from(layer.bias[o]); w * h];
        for i in 0..shape.in_channels {
            let src = &padded[i * pw * ph..(i + 1) * pw * ph];
            for ky in 0..k {
                for kx in 0..k {
                    let wt = f64::from(layer.weight[((o * shape.in_channels + i) * k + ky) * k + kx]);
                    if wt == 0.0 {
                        continue;
                    }
                    for y in 0..h {
                        let row = &src[(y + ky) * pw + kx..(y + ky) * pw + kx + w];
                        for (a, s) in acc[y * w..(y + 1) * w].iter_mut().zip(row) {
                            *a += wt * s;
                        }
                    }
                }
            }
        }
        out.extend_from_slice(&acc);
    }
    Ok(FeatureMap {
        width: w,
        height: h,
        channels: shape.out_channels,
        data: out,
    })
}

pub fn relu(mut map: FeatureMap) -> FeatureMap {
    for v in &mut map.data {
        *v = v.max(0.0);
    }
    map
}

/// `input + scaling * conv2(relu(conv1(input)))`
pub fn residual_block(input: &FeatureMap, conv1: &ConvLayer, conv2: &ConvLayer, scaling: f32) -> Result<FeatureMap> {
    let branch = conv2d(&relu(conv2d(input, conv1)?), conv2)?;
    if branch.channels != input.channels {
        return Err(Error::DimensionMismatch(alloc::format!(
            "residual branch has {} channels, skip has {}",
            branch.channels,
            input.channels
        )));
    }
    let s = f64::from(scaling);
    let data = input.data.iter().zip(&branch.data).map(|(x, b)| x + s * b).collect();
    Ok(FeatureMap { data, ..branch })
}

/// `(w, h, c r^2) -> (r w, r h, c)`; output channel `c` at `(r y + dy, r x + dx)`
/// takes input channel `c r^2 + dy r + dx` at `(y, x)`.
pub fn pixel_shuffle(input: &FeatureMap, r: usize) -> Result<FeatureMap> {
    let rr = r * r;
    if r == 0 || !input.channels.is_multiple_of(rr) {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} channels are not divisible by {r}^2",
            input.channels
        )));
    }
    let (w, h) = (input.width, input.height);
    let oc = input.channels / rr;
    let (ow, oh) = (w * r, h * r);
    let mut data = alloc::vec![0.0; ow * oh * oc];
    for c in 0..oc {
        for dy in 0..r {
            for dx in 0..r {
                let src = input.plane(c * rr + dy * r + dx);
                for y in 0..h {
                    for x in 0..w {
                        data[(c * oh + y * r + dy) * ow + x * r + dx] = src[y * w + x];
                    }
                }
            }
        }
    }
    Ok(FeatureMap {
        width: ow,
        height: oh,
        channels: oc,
        data,
    })
}

/// Exact inverse of [`pixel_shuffle`].
pub fn pixel_unshuffle(input: &FeatureMap, r: usize) -> Result<FeatureMap> {
    if r == 0 || !input.width.is_multiple_of(r) || !input.height.is_multiple_of(r) {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{}x{} is not divisible by {r}",
            input.width,
            input.height
        )));
    }
    let (w, h) = (input.width / r, input.height / r);
    let rr = r * r;
    let oc = input.channels * rr;
    let mut data = alloc::vec![0.0; w * h * oc];
    for c in 0..input.channels {
        let src = input.plane(c);
        for dy in 0..r {
            for dx in 0..r {
                let dst = (c * rr + dy * r + dx) * w * h;
                for y in 0..h {
                    for x in 0..w {
                        data[dst + y * w + x] = src[(y * r + dy) * input.width + x * r + dx];
                    }
                }
            }
        }
    }
    Ok(FeatureMap {
        width: w,
        height: h,
        channels: oc,
        data,
    })
}

/// A configured network with validated weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Edsr {
    weights: WeightStore,
}

impl Edsr {
    pub fn new(weights: WeightStore) -> Result<Self> {
        weights.validate()?;
        Ok(Edsr { weights })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.weights.config
    }

    pub fn weights(&self) -> &WeightStore {
        &self.weights
    }

    /// Super-resolves `image` by the configured scale. Output is clamped to
    /// `[0, 1]`; grayscale inputs come back as the mean of the RGB output.
    pub fn forward(&self, image: &Raster) -> Result<Raster> {
        let cfg = self.weights.config;
        let layers = &self.weights.layers;
        let mut next = layers.iter();
        let mut take = || next.next().expect("layer count validated");

        let head = conv2d(&FeatureMap::from_raster(image), take())?;
        head.check_finite("head")?;
        let mut x = head.clone();
        for b in 0..cfg.n_blocks {
            let conv1 = take();
            let conv2 = take();
            x = residual_block(&x, conv1, conv2, cfg.residual_scaling)?;
            x.check_finite(&alloc::format!("body.{b}"))?;
        }
        x = conv2d(&x, take())?;
        for (v, h) in x.data.iter_mut().zip(&head.data) {
            *v += h;
        }
        x.check_finite("body.conv")?;

        for &r in upsampler_factors(cfg.scale)? {
            x = pixel_shuffle(&conv2d(&x, take())?, r)?;
        }
        x.check_finite("upsample")?;
        let rgb = conv2d(&x, take())?;
        rgb.check_finite("tail")?;

        let n = rgb.width * rgb.height;
        let planes: Vec<Vec<f64>> = if image.channels() == 1 {
            let mut mean = alloc::vec![0.0; n];
            for c in 0..3 {
                for (m, v) in mean.iter_mut().zip(rgb.plane(c)) {
                    *m += v / 3.0;
                }
            }
            alloc::vec![mean]
        } else {
            (0..3).map(|c| rgb.plane(c).to_vec()).collect()
        };
        let gsd = image.gsd() / f64::from(cfg.scale);
        Ok(Raster::from_planes(rgb.width, rgb.height, &planes, gsd)?.clamp_unit())
    }
}

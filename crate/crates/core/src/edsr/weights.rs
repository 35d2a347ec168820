//! Weight storage and the on-disk format.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic      8 bytes  "TSEDSR01"
//! n_blocks   u32
//! n_feats    u32
//! scale      u32
//! kernel     u32
//! res_scale  f32
//! count      u32
//! count x { name_len u16, name utf-8, out_c u32, in_c u32, k u32 }
//! count x { weight f32[out_c * in_c * k * k], bias f32[out_c] }
//! ```

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{upsampler_factors, ModelConfig};
use crate::{Error, Result};

pub const WEIGHT_MAGIC: &[u8; 8] = b"TSEDSR01";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel: usize,
}

impl LayerShape {
    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel * self.kernel
    }
}

/// One convolution; weights indexed `[out][in][ky][kx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub name: String,
    pub shape: LayerShape,
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

impl ConvLayer {
    pub fn zeros(name: &str, shape: LayerShape) -> Self {
        ConvLayer {
            name: name.to_owned(),
            shape,
            weight: alloc::vec![0.0; shape.weight_len()],
            bias: alloc::vec![0.0; shape.out_channels],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightStore {
    pub config: ModelConfig,
    pub layers: Vec<ConvLayer>,
}

/// Names and shapes of every conv in execution order.
pub fn layout(config: &ModelConfig) -> Result<Vec<(String, LayerShape)>> {
    config.validate()?;
    let f = config.n_feats;
    let k = config.kernel_size;
    let shape = |out_channels, in_channels| LayerShape {
        out_channels,
        in_channels,
        kernel: k,
    };
    let mut out = alloc::vec![("head".to_string(), shape(f, 3))];
    for b in 0..config.n_blocks {
        out.push((alloc::format!("body.{b}.conv1"), shape(f, f)));
        out.push((alloc::format!("body.{b}.conv2"), shape(f, f)));
    }
    out.push(("body.conv".to_string(), shape(f, f)));
    for (i, r) in upsampler_factors(config.scale)?.iter().enumerate() {
        out.push((alloc::format!("upsample.{i}"), shape(f * r * r, f)));
    }
    out.push(("tail".to_string(), shape(3, f)));
    Ok(out)
}

impl WeightStore {
    pub fn zeros(config: ModelConfig) -> Self {
        let layers = layout(&config)
            .expect("valid config")
            .into_iter()
            .map(|(name, shape)| ConvLayer::zeros(&name, shape))
            .collect();
        WeightStore { config, layers }
    }

    /// Uniform fan-in initialization; deterministic in `seed`. Panics on an
    /// invalid config.
    pub fn seeded(config: ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = Self::zeros(config);
        for layer in &mut store.layers {
            let fan_in = (layer.shape.in_channels * layer.shape.kernel * layer.shape.kernel) as f32;
            let bound = libm::sqrtf(3.0 / fan_in);
            for w in &mut layer.weight {
                *w = (rng.random::<f32>() * 2.0 - 1.0) * bound;
            }
            for b in &mut layer.bias {
                *b = (rng.random::<f32>() * 2.0 - 1.0) * 0.01;
            }
        }
        store
    }

    pub fn validate(&self) -> Result<()> {
        let expected = layout(&self.config)?;
        if expected.len() != self.layers.len() {
            return Err(Error::WeightMismatch(alloc::format!(
                "expected {} layers, found {}",
                expected.len(),
                self.layers.len()
            )));
        }
        for ((name, shape), layer) in expected.iter().zip(&self.layers) {
            check_entry(name, shape, &layer.name, &layer.shape)?;
            if layer.weight.len() != shape.weight_len() || layer.bias.len() != shape.out_channels {
                return Err(Error::WeightMismatch(alloc::format!(
                    "`{name}` holds {} weights and {} biases",
                    layer.weight.len(),
                    layer.bias.len()
                )));
            }
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn layer(&self, name: &str) -> Option<&ConvLayer> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 4 * self.parameter_count());
        out.extend_from_slice(WEIGHT_MAGIC);
        for v in [
            self.config.n_blocks,
            self.config.n_feats,
            self.config.scale as usize,
            self.config.kernel_size,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.config.residual_scaling.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.name.len() as u16).to_le_bytes());
            out.extend_from_slice(l.name.as_bytes());
            for v in [l.shape.out_channels, l.shape.in_channels, l.shape.kernel] {
                out.extend_from_slice(&(v as u32).to_le_bytes());
            }
        }
        for l in &self.layers {
            for v in l.weight.iter().chain(&l.bias) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// The configuration echoed in a weight file's header.
    pub fn peek_config(bytes: &[u8]) -> Result<ModelConfig> {
        Reader { bytes, pos: 0 }.header()
    }

    /// Parses a weight file and checks it against the expected `config`.
    pub fn from_bytes(bytes: &[u8], config: &ModelConfig) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let stored = r.header()?;
        if stored != *config {
            return Err(Error::WeightMismatch(alloc::format!(
                "file holds {stored:?}, expected {config:?}"
            )));
        }
        let expected = layout(config)?;
        let count = r.u32("manifest")? as usize;
        if count != expected.len() {
            return Err(Error::WeightMismatch(alloc::format!(
                "manifest lists {count} tensors, expected {}",
                expected.len()
            )));
        }
        let mut manifest = Vec::with_capacity(count);
        for (name, shape) in &expected {
            let len = u16::from_le_bytes(r.array("manifest")?) as usize;
            let found = core::str::from_utf8(r.take(len, "manifest")?)
                .map_err(|_| Error::MalformedWeights("tensor name is not utf-8".into()))?
                .to_owned();
            let found_shape = LayerShape {
                out_channels: r.u32("manifest")? as usize,
                in_channels: r.u32("manifest")? as usize,
                kernel: r.u32("manifest")? as usize,
            };
            check_entry(name, shape, &found, &found_shape)?;
            manifest.push((found, found_shape));
        }
        let mut layers = Vec::with_capacity(count);
        for (name, shape) in manifest {
            let weight = r.f32s(shape.weight_len(), &name)?;
            let bias = r.f32s(shape.out_channels, &name)?;
            layers.push(ConvLayer {
                name,
                shape,
                weight,
                bias,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::MalformedWeights(alloc::format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(WeightStore {
            config: *config,
            layers,
        })
    }
}

fn check_entry(name: &str, shape: &LayerShape, found: &str, found_shape: &LayerShape) -> Result<()> {
    if name != found {
        return Err(Error::WeightMismatch(alloc::format!(
            "expected tensor `{name}`, found `{found}`"
        )));
    }
    if shape != found_shape {
        return Err(Error::WeightMismatch(alloc::format!(
            "`{name}` has shape {found_shape:?}, expected {shape:?}"
        )));
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn header(&mut self) -> Result<ModelConfig> {
        let magic = self.take(8, "header")?;
        if magic != WEIGHT_MAGIC {
            return Err(Error::MalformedWeights("bad magic".into()));
        }
        Ok(ModelConfig {
            n_blocks: self.u32("header")? as usize,
            n_feats: self.u32("header")? as usize,
            scale: self.u32("header")?,
            kernel_size: self.u32("header")? as usize,
            residual_scaling: f32::from_le_bytes(self.array("header")?),
        })
    }

    fn take(&mut self, n: usize, tensor: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::TruncatedWeights {
                tensor: tensor.to_owned(),
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self, tensor: &str) -> Result<[u8; N]> {
        Ok(self.take(N, tensor)?.try_into().expect("length checked"))
    }

    fn u32(&mut self, tensor: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(tensor)?))
    }

    fn f32s(&mut self, n: usize, tensor: &str) -> Result<Vec<f32>> {
        let raw = self.take(n * 4, tensor)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scale: u32) -> ModelConfig {
        ModelConfig {
            n_blocks: 2,
            n_feats: 4,
            scale,
            kernel_size: 3,
            residual_scaling: 0.5,
        }
    }

    #[test]
    fn round_trip() {
        for scale in [2, 3, 4] {
            let store = WeightStore::seeded(small(scale), 9);
            let bytes = store.to_bytes();
            assert_eq!(WeightStore::from_bytes(&bytes, &small(scale)).unwrap(), store);
        }
    }

    #[test]
    fn layout_counts() {
        // head + 2 per block + body conv + upsampler stages + tail
        assert_eq!(layout(&small(2)).unwrap().len(), 1 + 4 + 1 + 1 + 1);
        assert_eq!(layout(&small(4)).unwrap().len(), 1 + 4 + 1 + 2 + 1);
        let up = &layout(&small(3)).unwrap()[6];
        assert_eq!(up.0, "upsample.0");
        assert_eq!(up.1.out_channels, 36);
    }

    #[test]
    fn wrong_block_count_is_mismatch() {
        let bytes = WeightStore::seeded(small(2), 1).to_bytes();
        let other = ModelConfig {
            n_blocks: 3,
            ..small(2)
        };
        assert!(matches!(
            WeightStore::from_bytes(&bytes, &other),
            Err(Error::WeightMismatch(_))
        ));
    }

    #[test]
    fn truncation_names_the_tensor() {
        let bytes = WeightStore::seeded(small(2), 1).to_bytes();
        let cut = &bytes[..bytes.len() - 2];
        match WeightStore::from_bytes(cut, &small(2)) {
            Err(Error::TruncatedWeights { tensor }) => assert_eq!(tensor, "tail"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            WeightStore::from_bytes(&bytes[..20], &small(2)),
            Err(Error::TruncatedWeights { .. })
        ));
    }

    #[test]
    fn corrupted_manifest_is_mismatch() {
        let mut bytes = WeightStore::seeded(small(2), 1).to_bytes();
        // First manifest entry name starts after magic(8) + 5 words(20) + count(4) + len(2).
        bytes[34] = b'X';
        assert!(matches!(
            WeightStore::from_bytes(&bytes, &small(2)),
            Err(Error::WeightMismatch(_))
        ));
    }

    #[test]
    fn bad_magic_and_trailing_bytes() {
        let mut bytes = WeightStore::seeded(small(2), 1).to_bytes();
        bytes.push(0);
        assert!(matches!(
            WeightStore::from_bytes(&bytes, &small(2)),
            Err(Error::MalformedWeights(_))
        ));
        bytes[0] = b'x';
        assert!(matches!(
            WeightStore::from_bytes(&bytes, &small(2)),
            Err(Error::MalformedWeights(_))
        ));
    }

    #[test]
    fn header_peek() {
        let bytes = WeightStore::seeded(small(3), 1).to_bytes();
        assert_eq!(WeightStore::peek_config(&bytes).unwrap(), small(3));
        assert!(WeightStore::peek_config(&bytes[..10]).is_err());
    }

    #[test]
    fn seeded_is_deterministic() {
        assert_eq!(WeightStore::seeded(small(2), 4), WeightStore::seeded(small(2), 4));
        assert_ne!(WeightStore::seeded(small(2), 4), WeightStore::seeded(small(2), 5));
    }
}

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("region ({x}, {y}, {w}x{h}) lies outside a {width}x{height} raster")]
    OutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },

    #[error("intensity {value} at sample {index} is outside [0, 1]")]
    IntensityOutOfRange { index: usize, value: f64 },

    #[error("GRD {grd} m cannot be resolved on a {gsd} m/px grid (needs GRD >= {limit} m)")]
    OpticsUnresolvable { grd: f64, gsd: f64, limit: f64 },

    #[error("PSF has significant negative energy ({fraction:e} of total)")]
    NegativePsf { fraction: f64 },

    #[error("PSF pixel scale {psf} m does not match image GSD {image} m")]
    ScaleMismatch { psf: f64, image: f64 },

    #[error("resampling to {target} m/px would produce an empty image")]
    EmptyResample { target: f64 },

    #[error("unsupported scale factor {0} (expected 2, 3 or 4)")]
    UnsupportedScale(u32),

    #[error("weight manifest mismatch: {0}")]
    WeightMismatch(String),

    #[error("weight file truncated while reading tensor `{tensor}`")]
    TruncatedWeights { tensor: String },

    #[error("malformed weight file: {0}")]
    MalformedWeights(String),

    #[error("non-finite activation after layer `{0}`")]
    NonFinite(String),

    #[error("no records to aggregate")]
    EmptyGroup,

    #[error("no records for SNR50 = {0}")]
    MissingSlice(f64),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

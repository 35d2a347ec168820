//! Super-resolution backends and the registry that dispatches to them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use tradescope_core::edsr::{Edsr, ModelConfig, WeightStore};
use tradescope_core::resample::{self, Kernel};
use tradescope_core::Raster;

use crate::adapter;

pub const SUPPORTED_SCALES: [u32; 3] = [2, 3, 4];

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("unknown backend `{0}`")]
    Unknown(String),

    #[error("backend `{0}` is already registered")]
    Duplicate(String),

    #[error("backend `{backend}` does not support scale {scale}")]
    UnsupportedScale { backend: String, scale: u32 },

    #[error("failed to start adapter {}: {source}", program.display())]
    Spawn { program: PathBuf, source: std::io::Error },

    #[error("adapter timed out after {0:?}")]
    Timeout(Duration),

    #[error("adapter exited with {code:?}: {message}")]
    NonZeroExit { code: Option<i32>, message: String },

    #[error("malformed adapter status: {0}")]
    MalformedStatus(String),

    #[error("adapter reported failure: {0}")]
    AdapterFailed(String),

    #[error("expected {expected:?} output, got {got:?}")]
    DimsViolation {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },

    #[error("adapter workspace: {0}")]
    Workspace(String),

    #[error(transparent)]
    Model(#[from] tradescope_core::Error),
}

pub trait SrBackend: Send + Sync {
    fn supports_scale(&self, scale: u32) -> bool;

    /// Raw upscaling; the registry enforces the dims contract and clamping.
    fn upscale(&self, input: &Raster, scale: u32) -> Result<Raster, BackendError>;
}

/// Interpolation baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classical(pub Kernel);

impl SrBackend for Classical {
    fn supports_scale(&self, scale: u32) -> bool {
        scale >= 1
    }

    fn upscale(&self, input: &Raster, scale: u32) -> Result<Raster, BackendError> {
        Ok(resample::upscale(input, scale as usize, self.0)?)
    }
}

/// One EDSR network per supported scale.
#[derive(Debug, Clone, Default)]
pub struct EdsrBackend {
    models: BTreeMap<u32, Edsr>,
}

impl EdsrBackend {
    pub fn new(models: impl IntoIterator<Item = Edsr>) -> Self {
        EdsrBackend {
            models: models.into_iter().map(|m| (m.config().scale, m)).collect(),
        }
    }

    /// Random weights for every scale; for demos and tests only.
    pub fn seeded(base: ModelConfig, seed: u64) -> Result<Self, BackendError> {
        let models = SUPPORTED_SCALES
            .iter()
            .map(|&scale| {
                Edsr::new(WeightStore::seeded(
                    ModelConfig { scale, ..base },
                    seed ^ u64::from(scale),
                ))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(models))
    }

    pub fn scales(&self) -> Vec<u32> {
        self.models.keys().copied().collect()
    }
}

impl SrBackend for EdsrBackend {
    fn supports_scale(&self, scale: u32) -> bool {
        self.models.contains_key(&scale)
    }

    fn upscale(&self, input: &Raster, scale: u32) -> Result<Raster, BackendError> {
        let model = self.models.get(&scale).ok_or(BackendError::UnsupportedScale {
            backend: "edsr".into(),
            scale,
        })?;
        Ok(model.forward(input)?)
    }
}

/// A process speaking the file-based adapter protocol.
#[derive(Debug, Clone)]
pub struct ExternalBackend {
    pub program: PathBuf,
    pub args: Vec<String>,
    pub timeout: Duration,
    pub params: serde_json::Map<String, serde_json::Value>,
    /// Parent directory for per-job workspaces; the system temp dir if unset.
    pub workspace_root: Option<PathBuf>,
}

impl ExternalBackend {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExternalBackend {
            program: program.into(),
            args: Vec::new(),
            timeout: Duration::from_secs(60),
            params: serde_json::Map::new(),
            workspace_root: None,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_owned(), value.into());
        self
    }

    pub fn with_workspace_root(mut self, root: &Path) -> Self {
        self.workspace_root = Some(root.to_path_buf());
        self
    }
}

impl SrBackend for ExternalBackend {
    fn supports_scale(&self, scale: u32) -> bool {
        SUPPORTED_SCALES.contains(&scale)
    }

    fn upscale(&self, input: &Raster, scale: u32) -> Result<Raster, BackendError> {
        adapter::run_job(self, input, scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrResult {
    pub output: Raster,
    pub backend_id: String,
    pub wall_time: f64,
}

/// Write-once registry of named backends.
#[derive(Clone, Default)]
pub struct Registry {
    backends: BTreeMap<String, Arc<dyn SrBackend>>,
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.backends.keys()).finish()
    }
}

pub const CLASSICAL: [(&str, Kernel); 4] = [
    ("nearest", Kernel::Nearest),
    ("bilinear", Kernel::Bilinear),
    ("bicubic", Kernel::Bicubic),
    ("lanczos3", Kernel::Lanczos3),
];

impl Registry {
    /// A registry holding the classical interpolators.
    pub fn with_builtins() -> Self {
        let mut r = Registry::default();
        for (id, kernel) in CLASSICAL {
            r.register(id, Classical(kernel)).expect("distinct builtin ids");
        }
        r
    }

    pub fn register(&mut self, id: &str, backend: impl SrBackend + 'static) -> Result<(), BackendError> {
        if self.backends.contains_key(id) {
            return Err(BackendError::Duplicate(id.to_owned()));
        }
        self.backends.insert(id.to_owned(), Arc::new(backend));
        Ok(())
    }

    pub fn ids(&self) -> Vec<&str> {
        self.backends.keys().map(String::as_str).collect()
    }

    pub fn get(&self, id: &str) -> Result<&dyn SrBackend, BackendError> {
        self.backends
            .get(id)
            .map(|b| b.as_ref())
            .ok_or_else(|| BackendError::Unknown(id.to_owned()))
    }

    /// Upscales by `scale`, checking the dims contract and clamping to `[0, 1]`.
    pub fn upscale(&self, backend_id: &str, input: &Raster, scale: u32) -> Result<SrResult, BackendError> {
        let backend = self.get(backend_id)?;
        if !SUPPORTED_SCALES.contains(&scale) || !backend.supports_scale(scale) {
            return Err(BackendError::UnsupportedScale {
                backend: backend_id.to_owned(),
                scale,
            });
        }
        let start = Instant::now();
        let out = backend.upscale(input, scale)?;
        let s = scale as usize;
        let expected = (input.width() * s, input.height() * s, input.channels());
        let got = (out.width(), out.height(), out.channels());
        if got != expected {
            return Err(BackendError::DimsViolation { expected, got });
        }
        let output = out.with_gsd(input.gsd() / f64::from(scale))?.clamp_unit();
        Ok(SrResult {
            output,
            backend_id: backend_id.to_owned(),
            wall_time: start.elapsed().as_secs_f64(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Shrinker;

    impl SrBackend for Shrinker {
        fn supports_scale(&self, _: u32) -> bool {
            true
        }

        fn upscale(&self, input: &Raster, _: u32) -> Result<Raster, BackendError> {
            Ok(input.clone())
        }
    }

    #[test]
    fn nearest_replicates() {
        let r = Registry::with_builtins();
        let px = Raster::new(1, 1, 1, vec![0.3], 2.0).unwrap();
        let out = r.upscale("nearest", &px, 2).unwrap().output;
        assert_eq!((out.width(), out.height()), (2, 2));
        assert!(out.data().iter().all(|&v| v == 0.3));
        assert_eq!(out.gsd(), 1.0);
    }

    #[test]
    fn classical_keep_constants() {
        let r = Registry::with_builtins();
        let flat = Raster::filled(7, 5, 3, 0.42, 1.8).unwrap();
        for (id, _) in CLASSICAL {
            for scale in SUPPORTED_SCALES {
                let out = r.upscale(id, &flat, scale).unwrap().output;
                assert_eq!((out.width(), out.height()), (7 * scale as usize, 5 * scale as usize));
                assert!(out.data().iter().all(|v| (v - 0.42).abs() < 1e-9), "{id} x{scale}");
            }
        }
    }

    #[test]
    fn registry_errors() {
        let mut r = Registry::with_builtins();
        assert!(r.ids().contains(&"bicubic"));
        assert!(matches!(
            r.register("bicubic", Classical(Kernel::Bicubic)),
            Err(BackendError::Duplicate(_))
        ));
        r.register("shrinker", Shrinker).unwrap();
        assert!(r.ids().contains(&"shrinker"));
        let img = Raster::filled(4, 4, 1, 0.5, 1.0).unwrap();
        assert!(matches!(r.upscale("nope", &img, 2), Err(BackendError::Unknown(_))));
        assert!(matches!(
            r.upscale("bicubic", &img, 5),
            Err(BackendError::UnsupportedScale { .. })
        ));
        assert!(matches!(
            r.upscale("shrinker", &img, 2),
            Err(BackendError::DimsViolation { .. })
        ));
    }

    #[test]
    fn edsr_backend_dims() {
        let base = ModelConfig {
            n_blocks: 1,
            n_feats: 4,
            ..ModelConfig::desk(2)
        };
        let mut r = Registry::with_builtins();
        r.register("edsr", EdsrBackend::seeded(base, 3).unwrap()).unwrap();
        let img = Raster::filled(6, 5, 3, 0.5, 1.2).unwrap();
        for scale in SUPPORTED_SCALES {
            let out = r.upscale("edsr", &img, scale).unwrap().output;
            assert_eq!((out.width(), out.height()), (6 * scale as usize, 5 * scale as usize));
            assert!(out.is_unit_range());
        }
        let only_two = EdsrBackend::new([Edsr::new(WeightStore::zeros(base)).unwrap()]);
        assert_eq!(only_two.scales(), vec![2]);
        let mut r = Registry::default();
        r.register("edsr", only_two).unwrap();
        assert!(matches!(
            r.upscale("edsr", &img, 3),
            Err(BackendError::UnsupportedScale { .. })
        ));
    }
}

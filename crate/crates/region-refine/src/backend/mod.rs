//! The refiner abstraction: conditional generation over a multi-image input.
//!
//! A refiner receives the focused crop, the crop-resolution region mask, an
//! optional reference image and a text instruction, and returns a refined
//! crop at the same resolution. Three implementations ship here: an identity
//! backend (returns the focused input), a ground-truth oracle (returns the
//! crop of a known-good image, for harness verification), and an HTTP client
//! that carries the request to an external service. Backends are stateless
//! request handlers and safe to share across threads.

mod external;
pub mod mock;

pub use external::{ExternalRefiner, WireRequest, WireResponse, BASE_URL_ENV, REFINE_ENDPOINT};

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{BackendError, Error, Result};
use crate::focus::CropSpec;
use crate::raster::{BinaryMask, RasterImage, ResizeMode};

/// The multi-image refinement input: focused crop, optional reference,
/// crop-resolution region mask, and the text instruction.
#[derive(Debug, Clone)]
pub struct RefineRequest {
    pub focused_input: RasterImage,
    pub reference: Option<RasterImage>,
    pub region_mask: BinaryMask,
    pub instruction: String,
    pub crop_spec: CropSpec,
}

impl RefineRequest {
    pub fn validate(&self) -> Result<()> {
        if self.region_mask.height() != self.focused_input.height()
            || self.region_mask.width() != self.focused_input.width()
        {
            return Err(Error::ShapeMismatch(format!(
                "region mask {}x{} vs focused input {}x{}",
                self.region_mask.height(),
                self.region_mask.width(),
                self.focused_input.height(),
                self.focused_input.width()
            )));
        }
        if self.instruction.trim().is_empty() {
            return Err(Error::InvalidParameter("instruction must be non-empty".into()));
        }
        Ok(())
    }
}

/// A refined crop plus provenance.
#[derive(Debug, Clone)]
pub struct RefineResult {
    pub refined: RasterImage,
    pub backend_id: String,
    pub latency_ms: u64,
}

/// Anything that can produce a refined crop for a [`RefineRequest`].
pub trait Refiner: Send + Sync {
    fn backend_id(&self) -> String;
    fn refine_crop(&self, request: &RefineRequest) -> Result<RasterImage>;
}

/// Run a refinement request against a backend, timing it and validating the
/// returned dimensions.
pub fn refine(request: &RefineRequest, backend: &dyn Refiner) -> Result<RefineResult> {
    request.validate()?;
    let start = Instant::now();
    let refined = backend.refine_crop(request)?;
    let latency_ms = start.elapsed().as_millis() as u64;
    if refined.height() != request.focused_input.height()
        || refined.width() != request.focused_input.width()
    {
        return Err(BackendError::DimMismatch {
            got_h: refined.height(),
            got_w: refined.width(),
            want_h: request.focused_input.height(),
            want_w: request.focused_input.width(),
        }
        .into());
    }
    Ok(RefineResult {
        refined,
        backend_id: backend.backend_id(),
        latency_ms,
    })
}

/// Returns the focused input unchanged. Composed with paste-back this makes
/// the whole pipeline a byte-exact no-op.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityRefiner;

impl Refiner for IdentityRefiner {
    fn backend_id(&self) -> String {
        "identity".into()
    }

    fn refine_crop(&self, request: &RefineRequest) -> Result<RasterImage> {
        Ok(request.focused_input.clone())
    }
}

/// Answers every request with the crop of a configured ground-truth image,
/// resized to the request's target resolution. Used to verify the harness:
/// it is the best any refiner could do.
#[derive(Debug, Clone)]
pub struct OracleRefiner {
    gt: RasterImage,
}

impl OracleRefiner {
    pub fn new(gt: RasterImage) -> Self {
        Self { gt }
    }
}

impl Refiner for OracleRefiner {
    fn backend_id(&self) -> String {
        "oracle".into()
    }

    fn refine_crop(&self, request: &RefineRequest) -> Result<RasterImage> {
        let spec = &request.crop_spec;
        if self.gt.height() != spec.canvas.h || self.gt.width() != spec.canvas.w {
            return Err(Error::ShapeMismatch(format!(
                "oracle ground truth {}x{} vs canvas {}x{}",
                self.gt.height(),
                self.gt.width(),
                spec.canvas.h,
                spec.canvas.w
            )));
        }
        crate::focus::crop_image(&self.gt, &spec.rect)?.resize(
            spec.target.h,
            spec.target.w,
            ResizeMode::Bilinear,
        )
    }
}

fn default_timeout_ms() -> u64 {
    10_000
}

fn default_max_concurrent() -> usize {
    4
}

/// Serializable backend selection, embedded in the pipeline config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    #[default]
    Identity,
    /// Ground-truth oracle. `gt_path` may be omitted when the caller (e.g.
    /// the benchmark harness) supplies per-sample ground truth itself.
    Oracle {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gt_path: Option<PathBuf>,
    },
    /// External HTTP service speaking the `/v1/refine` JSON protocol.
    External {
        /// Falls back to the `REFINE_BACKEND_URL` environment variable.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base_url: Option<String>,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default)]
        retries: u32,
        #[serde(default = "default_max_concurrent")]
        max_concurrent: usize,
    },
}

/// Instantiate a refiner from its config. Oracle configs must carry a
/// ground-truth path here; the benchmark harness builds per-sample oracles
/// directly instead.
pub fn build_refiner(config: &BackendConfig) -> Result<Arc<dyn Refiner>> {
    match config {
        BackendConfig::Identity => Ok(Arc::new(IdentityRefiner)),
        BackendConfig::Oracle { gt_path: Some(path) } => {
            Ok(Arc::new(OracleRefiner::new(RasterImage::read_png(path)?)))
        }
        BackendConfig::Oracle { gt_path: None } => Err(Error::Config(
            "oracle backend requires gt_path outside the benchmark harness".into(),
        )),
        BackendConfig::External {
            base_url,
            timeout_ms,
            retries,
            max_concurrent,
        } => Ok(Arc::new(ExternalRefiner::new(
            external::resolve_base_url(base_url.as_deref())?,
            *timeout_ms,
            *retries,
            *max_concurrent,
        ))),
    }
}

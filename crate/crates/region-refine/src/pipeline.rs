//! End-to-end orchestration: localize, focus, refine, paste back.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::{refine, BackendConfig, RefineRequest, Refiner};
use crate::boundary::BandParams;
use crate::error::{Error, Result};
use crate::focus::{crop_image, crop_mask, make_crop_spec, CropSpec, FocusParams};
use crate::pasteback::{paste_back, BlendParams, PasteBackMode};
use crate::raster::{BinaryMask, RasterImage, ResizeMode};

/// Every knob of the inference pipeline, JSON-serializable with full-default
/// omission. Runs echo the fully resolved config for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Crop margin in pixels around the region bounding box.
    pub margin: usize,
    /// Pixel budget for the focused view.
    pub budget: usize,
    /// Target dimensions are rounded down to a multiple of this.
    pub granule: usize,
    pub blend: BlendParams,
    pub band: BandParams,
    pub paste_back: PasteBackMode,
    pub backend: BackendConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            margin: 64,
            budget: 1024 * 1024,
            granule: 8,
            blend: BlendParams::default(),
            band: BandParams::default(),
            paste_back: PasteBackMode::default(),
            backend: BackendConfig::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn focus_params(&self) -> FocusParams {
        FocusParams {
            margin: self.margin,
            budget: self.budget,
            granule: self.granule,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The fully resolved config as pretty JSON, for audit logs.
    pub fn resolved_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// The pipeline result plus the intermediates debug dumps want.
#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub output: RasterImage,
    pub crop_spec: CropSpec,
    pub backend_id: String,
    pub latency_ms: u64,
    /// The focused view handed to the backend.
    pub focused_input: RasterImage,
    /// The region mask at crop resolution.
    pub region_mask: BinaryMask,
    /// The backend's refined crop before paste-back.
    pub refined_crop: RasterImage,
}

/// Run the full region-refinement pipeline on one image.
pub fn refine_image(
    input: &RasterImage,
    mask: &BinaryMask,
    reference: Option<&RasterImage>,
    instruction: &str,
    config: &PipelineConfig,
    refiner: &dyn Refiner,
) -> Result<RefineOutcome> {
    if mask.height() != input.height() || mask.width() != input.width() {
        return Err(Error::ShapeMismatch(format!(
            "mask {}x{} vs image {}x{}",
            mask.height(),
            mask.width(),
            input.height(),
            input.width()
        )));
    }
    let spec = make_crop_spec(mask, &config.focus_params())?;
    let focused_input = crop_image(input, &spec.rect)?.resize(
        spec.target.h,
        spec.target.w,
        ResizeMode::Bilinear,
    )?;
    // nearest keeps the crop mask binary for the blend dilation
    let region_mask = crop_mask(mask, &spec.rect)?.resize_nearest(spec.target.h, spec.target.w)?;
    let request = RefineRequest {
        focused_input: focused_input.clone(),
        reference: reference.cloned(),
        region_mask: region_mask.clone(),
        instruction: instruction.to_string(),
        crop_spec: spec,
    };
    let result = refine(&request, refiner)?;
    let output = paste_back(
        input,
        &result.refined,
        &region_mask,
        &spec,
        &config.blend,
        config.paste_back,
    )?;
    Ok(RefineOutcome {
        output,
        crop_spec: spec,
        backend_id: result.backend_id,
        latency_ms: result.latency_ms,
        focused_input,
        region_mask,
        refined_crop: result.refined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{IdentityRefiner, OracleRefiner};
    use rand::{Rng, SeedableRng};

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            margin: 8,
            budget: 128 * 128,
            granule: 8,
            ..Default::default()
        }
    }

    #[test]
    fn identity_backend_round_trips_bit_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(60);
        let img = RasterImage::from_fn(80, 100, 3, |_, _, _| rng.gen()).unwrap();
        let mask = BinaryMask::from_fn(80, 100, |y, x| (30..50).contains(&y) && (40..70).contains(&x));
        let out = refine_image(&img, &mask, None, "noop", &small_config(), &IdentityRefiner).unwrap();
        assert!(out.output.bit_eq(&img));
    }

    #[test]
    fn identity_round_trip_edge_masks() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        let img = RasterImage::from_fn(64, 64, 3, |_, _, _| rng.gen()).unwrap();
        // mask touching the canvas edge
        let edge = BinaryMask::from_fn(64, 64, |y, x| y < 10 && x > 50);
        let out = refine_image(&img, &edge, None, "noop", &small_config(), &IdentityRefiner).unwrap();
        assert!(out.output.bit_eq(&img));
        // single-pixel mask
        let mut dot = BinaryMask::zeros(64, 64);
        dot.set(63, 0, 1);
        let out = refine_image(&img, &dot, None, "noop", &small_config(), &IdentityRefiner).unwrap();
        assert!(out.output.bit_eq(&img));
    }

    #[test]
    fn oracle_backend_pulls_region_toward_gt() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(62);
        let gt = RasterImage::from_fn(96, 96, 3, |y, x, _| {
            0.2 + 0.6 * ((x as f32 / 96.0) + (y as f32 / 96.0)) / 2.0
        })
        .unwrap();
        let mask = BinaryMask::from_fn(96, 96, |y, x| {
            let dy = y as f64 - 48.0;
            let dx = x as f64 - 48.0;
            dy * dy + dx * dx < 18.0 * 18.0
        });
        // degraded input: noise inside the mask
        let input = RasterImage::from_fn(96, 96, 3, |y, x, c| {
            if mask.get(y, x) == 1 {
                rng.gen()
            } else {
                gt.get(y, x, c)
            }
        })
        .unwrap();
        let config = small_config();
        let oracle = OracleRefiner::new(gt.clone());
        let out = refine_image(&input, &mask, None, "restore", &config, &oracle).unwrap();
        let before = crate::eval::mse(&input, &gt, Some(&mask)).unwrap();
        let after = crate::eval::mse(&out.output, &gt, Some(&mask)).unwrap();
        assert!(after < 0.1 * before, "region mse {before} -> {after}");
    }

    #[test]
    fn empty_mask_propagates_empty_region_error() {
        let img = RasterImage::splat(32, 32, 3, 0.5).unwrap();
        let err = refine_image(
            &img,
            &BinaryMask::zeros(32, 32),
            None,
            "noop",
            &small_config(),
            &IdentityRefiner,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyRegion(_)));
    }

    #[test]
    fn config_json_round_trip() {
        let config = PipelineConfig::default();
        let json = config.resolved_json();
        let back: PipelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, config);
        // defaults may be omitted entirely
        let sparse: PipelineConfig = serde_json::from_str("{\"margin\": 32}").unwrap();
        assert_eq!(sparse.margin, 32);
        assert_eq!(sparse.budget, 1024 * 1024);
        assert_eq!(sparse.blend.dilate_size, 7);
        assert_eq!(sparse.blend.blur_size, 11);
        assert_eq!(sparse.band.r_out, 17);
        assert_eq!(sparse.band.alpha, 9.0);
    }
}
